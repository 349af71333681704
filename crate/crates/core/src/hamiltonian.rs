//! Three-level singlet-triplet Hamiltonian, its eigenstructure, and the
//! transverse sweet spot.
//!
//! The basis is `(|T0(1,1)⟩, |S(1,1)⟩, |S(0,2)⟩)` and the Hamiltonian reads
//!
//! ```text
//! ⎡ 0    ΔB   0   ⎤
//! ⎢ ΔB   0    √2τ ⎥
//! ⎣ 0    √2τ  −ε  ⎦
//! ```
//!
//! Eigenstates are labelled `g, e, f` in ascending energy. The qubit lives in
//! `{|1⟩ = |g⟩, |0⟩ = |e⟩}`.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Level gaps below this (rad/ns) mark the spectrum as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Default sweet-spot search bracket, in GHz of detuning.
pub const DEFAULT_BRACKET_GHZ: (f64, f64) = (-20.0, 20.0);

const SCAN_POINTS: usize = 4001;

/// Static device parameters, all in rad/ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub delta_b: f64,
    pub tau: f64,
    pub epsilon: f64,
}

impl DeviceParams {
    pub fn new(delta_b: f64, tau: f64, epsilon: f64) -> Result<Self> {
        if !(delta_b >= 0.0 && tau >= 0.0) || !epsilon.is_finite() || !delta_b.is_finite() || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need finite delta_b >= 0 and tau >= 0, got delta_b = {delta_b}, tau = {tau}, epsilon = {epsilon}"
            )));
        }
        Ok(Self { delta_b, tau, epsilon })
    }

    /// Builds parameters from ordinary frequencies in GHz.
    pub fn from_ghz(delta_b: f64, tau: f64, epsilon: f64) -> Result<Self> {
        use crate::units::ghz;
        Self::new(ghz(delta_b), ghz(tau), ghz(epsilon))
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    /// Parameters biased at the transverse sweet spot of `(delta_b, tau)`.
    pub fn at_sweet_spot(delta_b: f64, tau: f64) -> Result<Self> {
        let p = Self::new(delta_b, tau, 0.0)?;
        let eps = find_tss(delta_b, tau, None, None)?;
        Ok(p.with_epsilon(eps))
    }
}

/// AC detuning drive `ε_AC cos(ω t + φ(t))`.
///
/// The piecewise-constant phase law `φ(t)` is carried by the
/// [`PulseSequence`](crate::pulses::PulseSequence) that is being played.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub eps_ac: f64,
    pub omega: f64,
}

impl DriveConfig {
    pub fn new(eps_ac: f64, omega: f64) -> Result<Self> {
        if !(eps_ac > 0.0 && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive needs eps_ac > 0 and omega > 0, got {eps_ac} and {omega}"
            )));
        }
        Ok(Self { eps_ac, omega })
    }

    /// Drive resonant with the qubit transition of `eigen`.
    pub fn resonant(eigen: &EigenSystem, eps_ac: f64) -> Result<Self> {
        Self::new(eps_ac, eigen.qubit_frequency())
    }
}

/// Branch of the sweet-spot search, i.e. the sign of `ε_SS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    /// The branch the sweet spot lies on: `ε > 0` for `ΔB > τ`.
    pub fn expected(delta_b: f64, tau: f64) -> Option<Self> {
        if delta_b > tau {
            Some(Branch::Positive)
        } else if delta_b < tau {
            Some(Branch::Negative)
        } else {
            None
        }
    }

    fn contains(self, eps: f64) -> bool {
        match self {
            Branch::Positive => eps > 0.0,
            Branch::Negative => eps < 0.0,
        }
    }
}

/// Sorted eigenstructure of `H_ST` and the dipole matrix `d_mn = ⟨m|∂H/∂ε|n⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    /// `E_g ≤ E_e ≤ E_f`.
    pub energies: [f64; 3],
    /// Column `n` holds eigenvector `n` in the `(T0, S11, S02)` basis.
    pub states: Matrix3<f64>,
    pub dipole: Matrix3<f64>,
    pub degenerate: bool,
}

/// Index of `|g⟩`, the qubit state `|1⟩`.
pub const G: usize = 0;
/// Index of `|e⟩`, the qubit state `|0⟩`.
pub const E: usize = 1;
/// Index of the leakage level `|f⟩`.
pub const F: usize = 2;

impl EigenSystem {
    /// Diagonalizes a real symmetric `h`, with `dh` the derivative of `h`
    /// with respect to detuning.
    ///
    /// Eigenvectors are fixed by making their largest-magnitude component
    /// positive.
    pub fn from_matrix(h: &Matrix3<f64>, dh: &Matrix3<f64>) -> Self {
        let eig = SymmetricEigen::new(*h);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut energies = [0.0; 3];
        let mut states = Matrix3::zeros();
        for (n, &k) in order.iter().enumerate() {
            energies[n] = eig.eigenvalues[k];
            let mut v = eig.eigenvectors.column(k).into_owned();
            let pivot = v
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(1.0);
            if pivot < 0.0 {
                v = -v;
            }
            states.set_column(n, &v);
        }
        let dipole = states.transpose() * dh * states;
        let gap = (energies[1] - energies[0]).min(energies[2] - energies[1]);
        Self {
            energies,
            states,
            dipole,
            degenerate: gap < DEGENERACY_THRESHOLD,
        }
    }

    /// `ω_q = E_e − E_g`.
    pub fn qubit_frequency(&self) -> f64 {
        self.energies[E] - self.energies[G]
    }

    /// `E_f − E_e`.
    pub fn leakage_frequency(&self) -> f64 {
        self.energies[F] - self.energies[E]
    }

    pub fn d(&self, m: usize, n: usize) -> f64 {
        self.dipole[(m, n)]
    }

    /// Transverse dipole element `d_ge`.
    pub fn d_ge(&self) -> f64 {
        self.dipole[(G, E)]
    }

    /// Hellmann–Feynman slope `∂ω_q/∂ε = d_ee − d_gg`.
    pub fn slope(&self) -> Result<f64> {
        if self.degenerate {
            return Err(Error::DegenerateSpectrum { gap: self.min_gap() });
        }
        Ok(self.dipole[(E, E)] - self.dipole[(G, G)])
    }

    pub fn min_gap(&self) -> f64 {
        (self.energies[1] - self.energies[0]).min(self.energies[2] - self.energies[1])
    }
}

pub fn build_hst(p: &DeviceParams) -> Matrix3<f64> {
    let t = SQRT_2 * p.tau;
    Matrix3::new(0.0, p.delta_b, 0.0, p.delta_b, 0.0, t, 0.0, t, -p.epsilon)
}

/// `∂H_ST/∂ε = −|S(0,2)⟩⟨S(0,2)|`.
pub fn detuning_derivative() -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(2, 2)] = -1.0;
    m
}

pub fn eigensystem(p: &DeviceParams) -> EigenSystem {
    EigenSystem::from_matrix(&build_hst(p), &detuning_derivative())
}

pub fn qubit_energy(p: &DeviceParams) -> f64 {
    eigensystem(p).qubit_frequency()
}

pub fn qubit_energy_derivative(p: &DeviceParams) -> Result<f64> {
    eigensystem(p).slope()
}

/// Locates `ε_SS` where `∂ω_q/∂ε = 0`.
///
/// `hint` defaults to the branch implied by `ΔB` vs `τ`, and `bracket` to
/// `±2π·20 GHz`.
pub fn find_tss(delta_b: f64, tau: f64, hint: Option<Branch>, bracket: Option<(f64, f64)>) -> Result<f64> {
    let p = DeviceParams::new(delta_b, tau, 0.0)?;
    find_tss_with(
        |eps| EigenSystem::from_matrix(&build_hst(&p.with_epsilon(eps)), &detuning_derivative()),
        hint.or(Branch::expected(delta_b, tau)),
        bracket,
    )
}

/// Sweet-spot search over an arbitrary detuning-dependent eigensystem.
pub fn find_tss_with<F>(system: F, hint: Option<Branch>, bracket: Option<(f64, f64)>) -> Result<f64>
where
    F: Fn(f64) -> EigenSystem,
{
    let (lo, hi) = bracket.unwrap_or((
        crate::units::ghz(DEFAULT_BRACKET_GHZ.0),
        crate::units::ghz(DEFAULT_BRACKET_GHZ.1),
    ));
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty bracket [{lo}, {hi}]")));
    }
    let Some(hint) = hint else {
        return Err(Error::InvalidParameter(
            "delta_b == tau leaves the sweet-spot branch undefined".into(),
        ));
    };
    let slope = |eps: f64| system(eps).slope().ok();

    let mut candidates = Vec::new();
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..SCAN_POINTS {
        let x = lo + step * i as f64;
        let Some(s) = slope(x) else {
            prev = None;
            continue;
        };
        if s == 0.0 {
            candidates.push(x);
        } else if let Some((px, ps)) = prev {
            if ps * s < 0.0 {
                if let Some(root) = refine(&slope, px, x, ps, s) {
                    candidates.push(root);
                }
            }
        }
        prev = Some((x, s));
    }
    candidates
        .into_iter()
        .filter(|&x| hint.contains(x))
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::NoRootInBracket { lo, hi })
}

/// Safeguarded secant (Illinois) refinement of a sign-changing bracket.
fn refine<F>(slope: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Option<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    let mut side = 0i8;
    for _ in 0..200 {
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let fx = slope(x)?;
        if fx.abs() < 1e-14 || (b - a).abs() < 1e-13 * (1.0 + x.abs()) {
            return Some(x);
        }
        if fx * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        b = x;
        fb = fx;
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, to_ghz};

    fn reference_tss() -> DeviceParams {
        DeviceParams::at_sweet_spot(ghz(2.5), ghz(1.5)).unwrap()
    }

    #[test]
    fn hst_entries() {
        let p = DeviceParams::new(0.3, 0.7, 1.9).unwrap();
        let h = build_hst(&p);
        assert_eq!(h[(1, 2)], SQRT_2 * 0.7);
        assert_eq!(h[(2, 2)], -1.9);
        assert_eq!(h, h.transpose());
        assert_eq!(build_hst(&DeviceParams::new(0.0, 0.0, 0.0).unwrap()), Matrix3::zeros());
    }

    #[test]
    fn rejects_negative_couplings() {
        assert!(DeviceParams::new(-1.0, 0.0, 0.0).is_err());
        assert!(DeviceParams::new(1.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn decoupled_singlet_at_zero_tunneling() {
        let p = DeviceParams::from_ghz(2.5, 0.0, -10.0).unwrap();
        let es = eigensystem(&p);
        assert!((es.energies[0] - ghz(-2.5)).abs() < 1e-12);
        assert!((es.energies[1] - ghz(2.5)).abs() < 1e-12);
        assert!((es.energies[2] - ghz(10.0)).abs() < 1e-12);
        assert!(es.d_ge().abs() < 1e-15);
        assert!((qubit_energy(&p) - ghz(5.0)).abs() < 1e-12);
    }

    #[test]
    fn sweet_spot_at_reference_parameters() {
        let p = reference_tss();
        assert!((to_ghz(p.epsilon) - 1.91935).abs() < 1e-4);
        let es = eigensystem(&p);
        assert!((es.d_ge().abs() - 0.45055).abs() < 1e-4);
        assert!(es.slope().unwrap().abs() < 1e-10);
        assert!((es.d(E, E) - es.d(G, G)).abs() < 1e-10);
    }

    #[test]
    fn negative_branch_for_weak_field() {
        let eps = find_tss(ghz(1.5), ghz(1.75), None, None).unwrap();
        assert!(eps < 0.0);
        assert!((to_ghz(eps) + 1.2423984).abs() < 1e-6);
    }

    #[test]
    fn slope_near_sweet_spot() {
        let p = reference_tss();
        let s = qubit_energy_derivative(&p.with_epsilon(p.epsilon + ghz(0.1))).unwrap();
        assert!(s > 0.015 && s < 0.03, "slope {s}");

        let q = DeviceParams::at_sweet_spot(ghz(1.5), ghz(1.75)).unwrap();
        let s2 = qubit_energy_derivative(&q.with_epsilon(q.epsilon + ghz(0.1))).unwrap();
        assert!(s2.abs() < s.abs());
    }

    #[test]
    fn dipole_trace_is_minus_one() {
        let es = eigensystem(&DeviceParams::new(3.1, 2.2, -4.0).unwrap());
        assert!((es.dipole.trace() + 1.0).abs() < 1e-12);
        assert_eq!(es.dipole, es.dipole.transpose());
    }

    #[test]
    fn degenerate_spectrum_is_flagged() {
        let es = eigensystem(&DeviceParams::new(0.0, 0.0, 0.0).unwrap());
        assert!(es.degenerate);
        assert!(matches!(es.slope(), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn equal_couplings_have_no_branch() {
        assert!(find_tss(1.0, 1.0, None, None).is_err());
    }

    #[test]
    fn narrow_bracket_without_root() {
        let r = find_tss(ghz(2.5), ghz(1.5), None, Some((ghz(5.0), ghz(6.0))));
        assert!(matches!(r, Err(Error::NoRootInBracket { .. })));
    }
}
