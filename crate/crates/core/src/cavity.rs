//! Resonator-mediated two-qubit entangling gate.
//!
//! Two sweet-spot qubits share a single resonator mode. With both qubits
//! resonant with the mode, the interaction reduces to
//!
//! ```text
//! H = Σ_k Ω_k (|g⟩⟨e|_k a† + |e⟩⟨g|_k a) + Σ_k δ_k |e⟩⟨e|_k,   Ω_k = g_k d_ge^(k)
//! ```
//!
//! and a pulse of area `∫Ω dt = π`, `Ω = √(Ω_1² + Ω_2²)`, returns the
//! zero-photon subspace to itself as [`entangler_unitary`]. Open-system
//! dynamics follow the Lindblad equation with photon loss `Γ_a D[a]`.
//!
//! States are ordered qubit 1 ⊗ qubit 2 ⊗ Fock with qubit levels `(g, e[, f])`,
//! so the computational block is `(gg0, ge0, eg0, ee0)`.

use crate::dynamics::MIN_REALIZATIONS;
use crate::error::{Error, Result};
use crate::hamiltonian::{EigenSystem, E, G};
use crate::linalg::{c, min_eigenvalue, unitary_step, DMat, C64, ONE, ZERO};
use crate::noise::realization_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const TRACE_TOLERANCE: f64 = 1e-9;
pub const POSITIVITY_TOLERANCE: f64 = 1e-7;
/// Neglected terms must oscillate at least this many times faster than their
/// coupling for the reduced model to be trusted.
pub const RWA_MARGIN: f64 = 10.0;

/// How a quasi-static frequency draw `δ` enters each qubit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCoupling {
    /// `δ |e⟩⟨e|`: the qubit splitting moves by `δ`.
    #[default]
    ExcitedLevel,
    /// `(δ/2) |e⟩⟨e|`: the splitting moves by `δ/2`.
    HalfShift,
}

impl NoiseCoupling {
    fn factor(self) -> f64 {
        match self {
            NoiseCoupling::ExcitedLevel => 1.0,
            NoiseCoupling::HalfShift => 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCorrelation {
    #[default]
    Independent,
    /// Both qubits see the same draw.
    Correlated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    /// Resonator angular frequency (rad/ns).
    pub omega_r: f64,
    /// Qubit-resonator couplings `g^(1), g^(2)` (rad/ns).
    pub g: [f64; 2],
    pub gamma_a: f64,
    #[serde(default)]
    pub gamma_1: f64,
    #[serde(default)]
    pub gamma_2: f64,
    /// Number of Fock levels kept (photon numbers `0..n_max`).
    #[serde(default = "default_fock")]
    pub n_max: usize,
    /// Levels per qubit: 2 for the reduced model, 3 to include `|f⟩`.
    #[serde(default = "default_qubit_levels")]
    pub qubit_levels: usize,
    #[serde(default)]
    pub noise_coupling: NoiseCoupling,
    #[serde(default)]
    pub correlation: NoiseCorrelation,
    /// Also detune the resonator by an independent draw of the same width.
    #[serde(default)]
    pub resonator_noise: bool,
}

fn default_fock() -> usize {
    2
}

fn default_qubit_levels() -> usize {
    2
}

impl CavityConfig {
    pub fn new(omega_r: f64, g: [f64; 2], gamma_a: f64) -> Result<Self> {
        let cfg = Self {
            omega_r,
            g,
            gamma_a,
            gamma_1: 0.0,
            gamma_2: 0.0,
            n_max: default_fock(),
            qubit_levels: default_qubit_levels(),
            noise_coupling: NoiseCoupling::default(),
            correlation: NoiseCorrelation::default(),
            resonator_noise: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Photon loss from a quality factor, `Γ_a = ω_r / Q`.
    pub fn with_quality_factor(mut self, q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quality factor must be positive, got {q}"
            )));
        }
        self.gamma_a = self.omega_r / q;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r > 0.0) || !self.omega_r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega_r must be positive, got {}",
                self.omega_r
            )));
        }
        for (name, v) in [
            ("gamma_a", self.gamma_a),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.g.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_max must be at least 2, got {}",
                self.n_max
            )));
        }
        if !(2..=3).contains(&self.qubit_levels) {
            return Err(Error::InvalidParameter(format!(
                "qubit_levels must be 2 or 3, got {}",
                self.qubit_levels
            )));
        }
        Ok(())
    }

    /// Mean coupling, the unit of the noise axis in sweeps.
    pub fn reference_coupling(&self) -> f64 {
        0.5 * (self.g[0].abs() + self.g[1].abs())
    }

    pub fn space(&self) -> HybridSpace {
        HybridSpace {
            qubit_levels: self.qubit_levels,
            fock: self.n_max,
        }
    }
}

/// Index bookkeeping for qubit 1 ⊗ qubit 2 ⊗ Fock.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HybridSpace {
    pub qubit_levels: usize,
    pub fock: usize,
}

impl HybridSpace {
    pub fn dim(&self) -> usize {
        self.qubit_levels * self.qubit_levels * self.fock
    }

    pub fn index(&self, q1: usize, q2: usize, n: usize) -> usize {
        (q1 * self.qubit_levels + q2) * self.fock + n
    }

    /// Indices of `(gg0, ge0, eg0, ee0)`.
    pub fn computational(&self) -> [usize; 4] {
        [
            self.index(G, G, 0),
            self.index(G, E, 0),
            self.index(E, G, 0),
            self.index(E, E, 0),
        ]
    }

    fn identity(n: usize) -> DMat {
        DMat::identity(n, n)
    }

    /// `|m⟩⟨n|` on qubit `k` (0 or 1), identity elsewhere.
    pub fn qubit_op(&self, k: usize, m: usize, n: usize) -> DMat {
        let q = self.qubit_levels;
        let mut s = DMat::zeros(q, q);
        s[(m, n)] = ONE;
        let (a, b) = if k == 0 {
            (s, Self::identity(q))
        } else {
            (Self::identity(q), s)
        };
        crate::linalg::kron(&crate::linalg::kron(&a, &b), &Self::identity(self.fock))
    }

    /// Photon annihilation operator.
    pub fn annihilation(&self) -> DMat {
        let mut a = DMat::zeros(self.fock, self.fock);
        for n in 1..self.fock {
            a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
        }
        let q = Self::identity(self.qubit_levels);
        crate::linalg::kron(&crate::linalg::kron(&q, &q), &a)
    }

    pub fn number(&self) -> DMat {
        let a = self.annihilation();
        a.adjoint() * a
    }
}

/// Per-realization quasi-static detunings (rad/ns).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub delta: [f64; 2],
    pub resonator: f64,
}

impl NoiseDraw {
    pub fn none() -> Self {
        Self::default()
    }

    /// Draws detunings of width `sigma`. Three normals are always consumed so
    /// that a given RNG stream maps to the same standardized draw for every
    /// `sigma` and every switch setting.
    pub fn sample<R: Rng>(sigma: f64, cfg: &CavityConfig, rng: &mut R) -> Self {
        let z: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let z2 = match cfg.correlation {
            NoiseCorrelation::Independent => z[1],
            NoiseCorrelation::Correlated => z[0],
        };
        Self {
            delta: [sigma * z[0], sigma * z2],
            resonator: if cfg.resonator_noise { sigma * z[2] } else { 0.0 },
        }
    }
}

/// A neglected interaction term whose oscillation is not fast enough.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RwaWarning {
    pub qubit: usize,
    pub m: usize,
    pub n: usize,
    pub coupling: f64,
    pub detuning: f64,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub matrix: DMat,
    pub space: HybridSpace,
    pub warnings: Vec<RwaWarning>,
}

/// Checks every term dropped by the reduced model against [`RWA_MARGIN`].
pub fn rwa_warnings(cfg: &CavityConfig, eigen: &[EigenSystem; 2]) -> Vec<RwaWarning> {
    let mut out = Vec::new();
    for (k, sys) in eigen.iter().enumerate() {
        for m in 0..3 {
            for n in m..3 {
                let coupling = (cfg.g[k] * sys.d(m, n)).abs();
                if coupling == 0.0 {
                    continue;
                }
                let gap = sys.energies[n] - sys.energies[m];
                let mut detunings = vec![gap + cfg.omega_r];
                if !(m == G && n == E) {
                    detunings.push(gap - cfg.omega_r);
                }
                for det in detunings {
                    let margin = det.abs() / coupling;
                    if margin < RWA_MARGIN {
                        out.push(RwaWarning {
                            qubit: k,
                            m,
                            n,
                            coupling,
                            detuning: det,
                            margin,
                        });
                    }
                }
            }
        }
    }
    out
}

fn noise_terms(cfg: &CavityConfig, space: &HybridSpace, draw: &NoiseDraw) -> DMat {
    let mut h = DMat::zeros(space.dim(), space.dim());
    let f = cfg.noise_coupling.factor();
    for k in 0..2 {
        if draw.delta[k] != 0.0 {
            h += space.qubit_op(k, E, E) * c(f * draw.delta[k], 0.0);
        }
    }
    if draw.resonator != 0.0 {
        h += space.number() * c(draw.resonator, 0.0);
    }
    h
}

/// Reduced Jaynes–Cummings Hamiltonian in the frame rotating at `ω_r`.
///
/// A residual qubit–resonator detuning `ω_q − ω_r` appears as a static
/// excited-level shift. Requires `qubit_levels == 2`; the three-level model is
/// time dependent, see [`full_hamiltonian`].
pub fn effective_hamiltonian(
    cfg: &CavityConfig,
    eigen: &[EigenSystem; 2],
    draw: &NoiseDraw,
) -> Result<EffectiveHamiltonian> {
    cfg.validate()?;
    if cfg.qubit_levels != 2 {
        return Err(Error::InvalidParameter(
            "the reduced model has two levels per qubit".into(),
        ));
    }
    let space = cfg.space();
    let a = space.annihilation();
    let ad = a.adjoint();
    let mut h = noise_terms(cfg, &space, draw);
    for (k, sys) in eigen.iter().enumerate() {
        let omega = cfg.g[k] * sys.d_ge();
        let lower = space.qubit_op(k, G, E);
        let term = &lower * &ad * c(omega, 0.0);
        h += &term + term.adjoint();
        let detuning = sys.qubit_frequency() - cfg.omega_r;
        if detuning != 0.0 {
            h += space.qubit_op(k, E, E) * c(detuning, 0.0);
        }
    }
    Ok(EffectiveHamiltonian {
        matrix: h,
        space,
        warnings: rwa_warnings(cfg, eigen),
    })
}

/// The full qubit–resonator coupling in the interaction picture of the bare
/// qubit and resonator energies, with every level pair and both rotating and
/// counter-rotating parts kept.
pub struct FullHamiltonian {
    space: HybridSpace,
    terms: Vec<(DMat, f64)>,
    static_part: DMat,
}

impl FullHamiltonian {
    pub fn new(cfg: &CavityConfig, eigen: &[EigenSystem; 2], draw: &NoiseDraw) -> Result<Self> {
        cfg.validate()?;
        let space = cfg.space();
        let q = space.qubit_levels;
        let a = space.annihilation();
        let ad = a.adjoint();
        let mut terms = Vec::new();
        for (k, sys) in eigen.iter().enumerate() {
            for m in 0..q {
                for n in 0..q {
                    let coupling = cfg.g[k] * sys.d(m, n);
                    if coupling == 0.0 {
                        continue;
                    }
                    let s = space.qubit_op(k, m, n) * c(coupling, 0.0);
                    let w = sys.energies[m] - sys.energies[n];
                    terms.push((&s * &a, w - cfg.omega_r));
                    terms.push((&s * &ad, w + cfg.omega_r));
                }
            }
        }
        Ok(Self {
            space,
            terms,
            static_part: noise_terms(cfg, &space, draw),
        })
    }

    pub fn at(&self, t: f64) -> DMat {
        let mut h = self.static_part.clone();
        for (op, w) in &self.terms {
            h += op * C64::from_polar(1.0, w * t);
        }
        h
    }

    pub fn fastest_frequency(&self) -> f64 {
        self.terms.iter().map(|(_, w)| w.abs()).fold(0.0, f64::max)
    }

    /// Twenty steps per period of the fastest term.
    pub fn default_time_step(&self) -> f64 {
        let w = self.fastest_frequency();
        if w > 0.0 {
            2.0 * std::f64::consts::PI / (20.0 * w)
        } else {
            0.01
        }
    }
}

/// Gate parameters of the Λ-system entangler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglerSpec {
    pub xi: f64,
    pub omega: f64,
    pub duration: f64,
}

impl EntanglerSpec {
    /// From the effective couplings `Ω_1, Ω_2`, with `tan(ξ/2) = −Ω_1/Ω_2`.
    pub fn from_rates(omega1: f64, omega2: f64) -> Result<Self> {
        let omega = omega1.hypot(omega2);
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter("both effective couplings vanish".into()));
        }
        Ok(Self {
            xi: 2.0 * (-omega1).atan2(omega2),
            omega,
            duration: std::f64::consts::PI / omega,
        })
    }

    pub fn for_devices(cfg: &CavityConfig, eigen: &[EigenSystem; 2]) -> Result<Self> {
        Self::from_rates(cfg.g[0] * eigen[0].d_ge(), cfg.g[1] * eigen[1].d_ge())
    }
}

/// Target gate on `(gg0, ge0, eg0, ee0)`.
pub fn entangler_unitary(xi: f64) -> DMat {
    let (s, co) = xi.sin_cos();
    let mut u = DMat::zeros(4, 4);
    u[(0, 0)] = ONE;
    u[(1, 1)] = c(co, 0.0);
    u[(1, 2)] = c(s, 0.0);
    u[(2, 1)] = c(s, 0.0);
    u[(2, 2)] = c(-co, 0.0);
    u[(3, 3)] = c(-1.0, 0.0);
    u
}

/// Density matrix on the hybrid space.
#[derive(Clone, Debug)]
pub struct HybridState {
    pub rho: DMat,
    pub space: HybridSpace,
}

impl HybridState {
    pub fn basis(space: HybridSpace, q1: usize, q2: usize, n: usize) -> Self {
        let d = space.dim();
        let mut rho = DMat::zeros(d, d);
        let i = space.index(q1, q2, n);
        rho[(i, i)] = ONE;
        Self { rho, space }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn population(&self, q1: usize, q2: usize, n: usize) -> f64 {
        let i = self.space.index(q1, q2, n);
        self.rho[(i, i)].re
    }

    /// Total population with either qubit outside `{g, e}`.
    pub fn leakage(&self) -> f64 {
        let q = self.space.qubit_levels;
        let mut p = 0.0;
        for q1 in 0..q {
            for q2 in 0..q {
                if q1 < 2 && q2 < 2 {
                    continue;
                }
                for n in 0..self.space.fock {
                    p += self.population(q1, q2, n);
                }
            }
        }
        p
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.rho)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).norm()
    }

    fn check(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::TraceDrift { trace: tr });
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOLERANCE {
            return Err(Error::PositivityViolation { min_eigenvalue: min });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CavityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<HybridState>,
}

impl CavityTrajectory {
    pub fn last(&self) -> &HybridState {
        self.states.last().expect("trajectories hold the initial state")
    }

    pub fn max_leakage(&self) -> f64 {
        self.states.iter().map(HybridState::leakage).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_ns,P_ge0,P_eg0")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(w, "{t},{},{}", s.population(G, E, 0), s.population(E, G, 0))?;
        }
        Ok(())
    }
}

/// Collapse operators, each already scaled by the square root of its rate.
///
/// Relaxation uses `|g⟩⟨e|` and dephasing `σ_z` on each qubit, the latter at
/// rate `Γ_2/2` so that coherences decay as `e^{−Γ_2 t}`.
pub fn collapse_operators(cfg: &CavityConfig) -> Vec<DMat> {
    let space = cfg.space();
    let mut ops = Vec::new();
    if cfg.gamma_a > 0.0 {
        ops.push(space.annihilation() * c(cfg.gamma_a.sqrt(), 0.0));
    }
    for k in 0..2 {
        if cfg.gamma_1 > 0.0 {
            ops.push(space.qubit_op(k, G, E) * c(cfg.gamma_1.sqrt(), 0.0));
        }
        if cfg.gamma_2 > 0.0 {
            let sz = space.qubit_op(k, G, G) - space.qubit_op(k, E, E);
            ops.push(sz * c((0.5 * cfg.gamma_2).sqrt(), 0.0));
        }
    }
    ops
}

fn dissipator(collapse: &[DMat], d: usize) -> DMat {
    let id = DMat::identity(d, d);
    let mut l = DMat::zeros(d * d, d * d);
    for op in collapse {
        let ldl = op.adjoint() * op;
        l += crate::linalg::kron(&op.conjugate(), op);
        l -= crate::linalg::kron(&id, &ldl) * c(0.5, 0.0);
        l -= crate::linalg::kron(&ldl.transpose(), &id) * c(0.5, 0.0);
    }
    l
}

/// Liouvillian acting on column-stacked density matrices.
pub fn liouvillian(h: &DMat, collapse: &[DMat]) -> DMat {
    let d = h.nrows();
    let id = DMat::identity(d, d);
    let coherent = (crate::linalg::kron(&id, h) - crate::linalg::kron(&h.transpose(), &id)) * c(0.0, -1.0);
    coherent + dissipator(collapse, d)
}

fn vectorize(m: &DMat) -> DMat {
    DMat::from_column_slice(m.len(), 1, m.as_slice())
}

fn unvectorize(v: &DMat, d: usize) -> DMat {
    DMat::from_column_slice(d, d, v.as_slice())
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_final must be non-negative, got {t_final}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(((t_final / dt).ceil() as usize).max(1))
}

/// Lindblad evolution under a time-independent Hamiltonian.
///
/// Steps are exact (`exp(L dt)`) so `dt` only sets the output resolution.
/// Every stored state is checked for trace and positivity.
pub fn evolve_lindblad(
    cfg: &CavityConfig,
    h: &DMat,
    rho0: &HybridState,
    t_final: f64,
    dt: f64,
) -> Result<CavityTrajectory> {
    cfg.validate()?;
    let d = rho0.space.dim();
    if h.nrows() != d || cfg.space() != rho0.space {
        return Err(Error::InvalidParameter(
            "state and Hamiltonian live on different spaces".into(),
        ));
    }
    let steps = step_count(t_final, dt)?;
    let h_step = t_final / steps as f64;
    let prop = (liouvillian(h, &collapse_operators(cfg)) * c(h_step, 0.0)).exp();
    rho0.check()?;
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut v = vectorize(&rho0.rho);
    for i in 1..=steps {
        v = &prop * v;
        let s = HybridState {
            rho: unvectorize(&v, d),
            space: rho0.space,
        };
        s.check()?;
        times.push(i as f64 * h_step);
        states.push(s);
    }
    Ok(CavityTrajectory { times, states })
}

/// Lindblad evolution under the time-dependent [`FullHamiltonian`] using a
/// symmetric split: half a dissipative step, a midpoint unitary step, half a
/// dissipative step.
pub fn evolve_lindblad_full(
    cfg: &CavityConfig,
    h: &FullHamiltonian,
    rho0: &HybridState,
    t_final: f64,
    dt: f64,
) -> Result<CavityTrajectory> {
    cfg.validate()?;
    let d = rho0.space.dim();
    if cfg.space() != rho0.space || h.space != rho0.space {
        return Err(Error::InvalidParameter(
            "state and Hamiltonian live on different spaces".into(),
        ));
    }
    let steps = step_count(t_final, dt)?;
    let h_step = t_final / steps as f64;
    let collapse = collapse_operators(cfg);
    let half = if collapse.is_empty() {
        None
    } else {
        Some((dissipator(&collapse, d) * c(0.5 * h_step, 0.0)).exp())
    };
    rho0.check()?;
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut rho = rho0.rho.clone();
    let apply_half = |rho: DMat| -> DMat {
        match &half {
            Some(p) => unvectorize(&(p * vectorize(&rho)), d),
            None => rho,
        }
    };
    for i in 1..=steps {
        let t_mid = (i as f64 - 0.5) * h_step;
        let u = unitary_step(&h.at(t_mid), h_step);
        rho = apply_half(rho);
        rho = &u * rho * u.adjoint();
        rho = apply_half(rho);
        let s = HybridState {
            rho: rho.clone(),
            space: rho0.space,
        };
        s.check()?;
        times.push(i as f64 * h_step);
        states.push(s);
    }
    Ok(CavityTrajectory { times, states })
}

/// Evolution of `|ge0⟩` through one entangler, in the model selected by
/// `cfg.qubit_levels`.
pub fn population_trace(
    cfg: &CavityConfig,
    eigen: &[EigenSystem; 2],
    draw: &NoiseDraw,
    dt: Option<f64>,
) -> Result<CavityTrajectory> {
    let spec = EntanglerSpec::for_devices(cfg, eigen)?;
    let rho0 = HybridState::basis(cfg.space(), G, E, 0);
    if cfg.qubit_levels == 2 {
        let h = effective_hamiltonian(cfg, eigen, draw)?;
        evolve_lindblad(
            cfg,
            &h.matrix,
            &rho0,
            spec.duration,
            dt.unwrap_or(spec.duration / 200.0),
        )
    } else {
        let h = FullHamiltonian::new(cfg, eigen, draw)?;
        let step = dt.unwrap_or_else(|| h.default_time_step());
        evolve_lindblad_full(cfg, &h, &rho0, spec.duration, step)
    }
}

/// A trace-non-increasing map on the computational block, stored as the
/// images of the 16 operators `|i⟩⟨j|`.
#[derive(Clone, Debug)]
pub struct BlockProcess {
    /// `images[4 i + j] = P E(|i⟩⟨j|) P`.
    pub images: Vec<DMat>,
}

impl BlockProcess {
    pub fn image(&self, i: usize, j: usize) -> &DMat {
        &self.images[4 * i + j]
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`.
    pub fn choi(&self) -> DMat {
        let mut out = DMat::zeros(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                let img = self.image(i, j);
                for r in 0..4 {
                    for s in 0..4 {
                        out[(4 * i + r, 4 * j + s)] = img[(r, s)];
                    }
                }
            }
        }
        out
    }

    /// Average gate fidelity against a 4×4 unitary, leakage out of the block
    /// counting as error:
    /// `F = (Σ_i Tr E(|i⟩⟨i|) + Σ_ij ⟨Ui| E(|i⟩⟨j|) |Uj⟩) / (d(d+1))`.
    pub fn average_gate_fidelity(&self, target: &DMat) -> f64 {
        let d = 4.0;
        let mut kept = 0.0;
        let mut ent = ZERO;
        for i in 0..4 {
            kept += self.image(i, i).trace().re;
            for j in 0..4 {
                let ui = target.column(i);
                let uj = target.column(j);
                ent += (ui.adjoint() * self.image(i, j) * uj)[(0, 0)];
            }
        }
        (kept + ent.re) / (d * (d + 1.0))
    }
}

/// Runs the 16 block operators through the gate and validates the result.
pub fn block_process(cfg: &CavityConfig, eigen: &[EigenSystem; 2], draw: &NoiseDraw) -> Result<BlockProcess> {
    let spec = EntanglerSpec::for_devices(cfg, eigen)?;
    let space = cfg.space();
    let comp = space.computational();
    let d = space.dim();
    let evolve: Box<dyn Fn(&DMat) -> DMat> = if cfg.qubit_levels == 2 {
        let h = effective_hamiltonian(cfg, eigen, draw)?;
        let prop = (liouvillian(&h.matrix, &collapse_operators(cfg)) * c(spec.duration, 0.0)).exp();
        Box::new(move |rho: &DMat| unvectorize(&(&prop * vectorize(rho)), d))
    } else {
        let h = FullHamiltonian::new(cfg, eigen, draw)?;
        let step = h.default_time_step();
        let steps = step_count(spec.duration, step)?;
        let h_step = spec.duration / steps as f64;
        let mut u = DMat::identity(d, d);
        for i in 0..steps {
            u = unitary_step(&h.at((i as f64 + 0.5) * h_step), h_step) * u;
        }
        let collapse = collapse_operators(cfg);
        if !collapse.is_empty() {
            return Err(Error::InvalidParameter(
                "block processes of the three-level model are closed-system only".into(),
            ));
        }
        Box::new(move |rho: &DMat| &u * rho * u.adjoint())
    };
    let mut images = Vec::with_capacity(16);
    for &i in &comp {
        for &j in &comp {
            let mut op = DMat::zeros(d, d);
            op[(i, j)] = ONE;
            let out = evolve(&op);
            if i == j {
                let tr = out.trace().re;
                if (tr - 1.0).abs() > TRACE_TOLERANCE {
                    return Err(Error::TraceDrift { trace: tr });
                }
            }
            let mut block = DMat::zeros(4, 4);
            for (r, &ri) in comp.iter().enumerate() {
                for (s, &si) in comp.iter().enumerate() {
                    block[(r, s)] = out[(ri, si)];
                }
            }
            images.push(block);
        }
    }
    let process = BlockProcess { images };
    let min = min_eigenvalue(&process.choi());
    if min < -POSITIVITY_TOLERANCE {
        return Err(Error::PositivityViolation { min_eigenvalue: min });
    }
    Ok(process)
}

/// Gate fidelity of one noise realization against `U_ent(ξ)` for the
/// devices' own `ξ`.
pub fn gate_fidelity(cfg: &CavityConfig, eigen: &[EigenSystem; 2], draw: &NoiseDraw) -> Result<f64> {
    let spec = EntanglerSpec::for_devices(cfg, eigen)?;
    let process = block_process(cfg, eigen, draw)?;
    Ok(process.average_gate_fidelity(&entangler_unitary(spec.xi)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sigma_over_g: f64,
    pub mean_fidelity: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelitySweep {
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl FidelitySweep {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sigma_over_g,mean_fidelity,stderr,n")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.sigma_over_g, p.mean_fidelity, p.stderr, p.n)?;
        }
        Ok(())
    }
}

/// Mean gate fidelity over quasi-static draws for each `σ/g`, where `g` is
/// [`CavityConfig::reference_coupling`]. Realization `i` uses the RNG stream
/// `(seed, i)` at every grid point, so the curves share their draws.
pub fn fidelity_sweep(
    cfg: &CavityConfig,
    eigen: &[EigenSystem; 2],
    sigma_over_g: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<FidelitySweep> {
    if n_realizations < MIN_REALIZATIONS {
        return Err(Error::TooShort {
            len: n_realizations,
            min: MIN_REALIZATIONS,
        });
    }
    cfg.validate()?;
    let g = cfg.reference_coupling();
    let mut points = Vec::with_capacity(sigma_over_g.len());
    for &s in sigma_over_g {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma/g must be non-negative, got {s}"
            )));
        }
        let fids = (0..n_realizations)
            .into_par_iter()
            .map(|i| {
                let mut rng = realization_rng(seed, i as u64);
                let draw = NoiseDraw::sample(s * g, cfg, &mut rng);
                gate_fidelity(cfg, eigen, &draw)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = fids.len() as f64;
        let mean = fids.iter().sum::<f64>() / n;
        let var = fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
        points.push(SweepPoint {
            sigma_over_g: s,
            mean_fidelity: mean,
            stderr: (var / n).sqrt(),
            n: fids.len(),
        });
    }
    Ok(FidelitySweep { seed, points })
}
