//! Filter transfer functions of piecewise-constant sequences.
//!
//! For a sequence `Q(t)` the control matrix is
//! `R_ij(ω) = −iω ∫_0^T e^{iωt} V_ij[Q(t)] dt` with
//! `V_ij[U] = Tr(U† σ_i U σ_j)/2`. During segment `k`, `Q(t) = U_k(t) Q_{k−1}`,
//! so `V[Q(t)] = V[U_k(t)] Λ^{(k−1)}` with `Λ^{(k−1)} = V[Q_{k−1}]`. Each
//! segment is a rotation about an in-plane axis `n`, for which
//! `V[U_k(t)] = n nᵀ + cos(Ω0 t)(I − n nᵀ) + sin(Ω0 t) S` and the time integral
//! is elementary.
//!
//! The dephasing filter function is `F_z(ω) = Σ_k |R_zk(ω)|²` and the
//! first-order fidelity under a spectrum `S(ω)` of the `σz` coefficient is
//! `F = 1 − (1/2π) ∫_{ω_ir}^{ω_uv} S(ω) F_z(ω)/ω² dω`.

use crate::error::{Error, Result};
use crate::linalg::{sigma_x, sigma_y, sigma_z, Mat2, C64, I};
use crate::noise::SpectralModel;
use crate::pulses::{rotation_unitary, PulseSequence};
use nalgebra::{Matrix3, RowVector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

/// `R(ω)` at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlMatrix {
    pub omega: f64,
    pub entries: Matrix3<C64>,
}

/// `F_z` sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// `V_ij[U] = Re Tr(U† σ_i U σ_j)/2`.
pub fn adjoint_rotation(u: &Mat2) -> Matrix3<f64> {
    let p = [sigma_x(), sigma_y(), sigma_z()];
    Matrix3::from_fn(|i, j| {
        let m = u.adjoint() * p[i] * u * p[j];
        0.5 * (m[(0, 0)] + m[(1, 1)]).re
    })
}

/// `∫_0^T e^{iat} dt`, stable for small `aT`.
fn phase_integral(a: f64, t: f64) -> C64 {
    let x = 0.5 * a * t;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    };
    C64::from_polar(t * sinc, x)
}

struct Piece {
    start: f64,
    duration: f64,
    constant: Matrix3<f64>,
    cosine: Matrix3<f64>,
    sine: Matrix3<f64>,
    frame: Matrix3<f64>,
}

/// Per-segment data of a sequence, reusable across frequencies.
pub struct FilterPlan {
    omega0: f64,
    pieces: Vec<Piece>,
}

impl FilterPlan {
    pub fn new(seq: &PulseSequence) -> Self {
        let mut q = Mat2::identity();
        let mut start = 0.0;
        let mut pieces = Vec::with_capacity(seq.segments.len());
        for seg in &seq.segments {
            let n = nalgebra::Vector3::new(seg.phi.cos(), seg.phi.sin(), 0.0);
            let nn = n * n.transpose();
            // Row i of S is −(n × e_i).
            let sine = Matrix3::from_fn(|i, j| {
                let mut e = nalgebra::Vector3::zeros();
                e[i] = 1.0;
                -n.cross(&e)[j]
            });
            let duration = seg.theta / seq.omega0;
            pieces.push(Piece {
                start,
                duration,
                constant: nn,
                cosine: Matrix3::identity() - nn,
                sine,
                frame: adjoint_rotation(&q),
            });
            q = rotation_unitary(seg, 0.0) * q;
            start += duration;
        }
        Self {
            omega0: seq.omega0,
            pieces,
        }
    }

    /// `R(ω)/(−iω)`, i.e. `∫ e^{iωt} V[Q(t)] dt`.
    fn integral(&self, omega: f64) -> Matrix3<C64> {
        let w0 = self.omega0;
        let mut total = Matrix3::<C64>::zeros();
        for p in &self.pieces {
            let i0 = phase_integral(omega, p.duration);
            let ip = phase_integral(omega + w0, p.duration);
            let im = phase_integral(omega - w0, p.duration);
            let ic = (ip + im) * 0.5;
            let is = (ip - im) / (I * 2.0);
            let local = p.constant.map(|x| i0 * x) + p.cosine.map(|x| ic * x) + p.sine.map(|x| is * x);
            total += local * p.frame.map(|x| C64::new(x, 0.0)) * C64::from_polar(1.0, omega * p.start);
        }
        total
    }

    /// z-row only, which is all `F_z` needs.
    fn integral_z(&self, omega: f64) -> RowVector3<C64> {
        let w0 = self.omega0;
        let mut total = RowVector3::<C64>::zeros();
        for p in &self.pieces {
            let i0 = phase_integral(omega, p.duration);
            let ip = phase_integral(omega + w0, p.duration);
            let im = phase_integral(omega - w0, p.duration);
            let ic = (ip + im) * 0.5;
            let is = (ip - im) / (I * 2.0);
            let mut row = RowVector3::<C64>::zeros();
            for j in 0..3 {
                row[j] = i0 * p.constant[(2, j)] + ic * p.cosine[(2, j)] + is * p.sine[(2, j)];
            }
            let mut out = RowVector3::<C64>::zeros();
            for j in 0..3 {
                out[j] = (0..3).map(|k| row[k] * p.frame[(k, j)]).sum::<C64>();
            }
            total += out * C64::from_polar(1.0, omega * p.start);
        }
        total
    }

    pub fn control(&self, omega: f64) -> ControlMatrix {
        ControlMatrix {
            omega,
            entries: self.integral(omega) * C64::new(0.0, -omega),
        }
    }

    /// `F_z(ω)/ω²`, finite at `ω = 0`.
    pub fn fz_over_omega2(&self, omega: f64) -> f64 {
        self.integral_z(omega).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn fz(&self, omega: f64) -> f64 {
        omega * omega * self.fz_over_omega2(omega)
    }
}

pub fn control_matrix(seq: &PulseSequence, omega: f64) -> ControlMatrix {
    FilterPlan::new(seq).control(omega)
}

pub fn filter_fn(seq: &PulseSequence, grid: &[f64]) -> FilterFunction {
    let plan = FilterPlan::new(seq);
    FilterFunction {
        grid: grid.to_vec(),
        values: grid.par_iter().map(|&w| plan.fz(w)).collect(),
    }
}

impl FilterFunction {
    /// CSV with columns `omega_over_omega0, Fz_over_omega2`, where the
    /// second column is in units of `1/Ω0²`.
    pub fn write_csv<W: Write>(&self, omega0: f64, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega_over_omega0,Fz_over_omega2")?;
        for (om, f) in self.grid.iter().zip(&self.values) {
            let x = om / omega0;
            writeln!(w, "{x:.9e},{:.12e}", f / (x * x))?;
        }
        Ok(())
    }
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub points_per_decade: usize,
    /// Absolute change in fidelity accepted between successive doublings.
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            points_per_decade: 200,
            tolerance: 1e-6,
            max_doublings: 10,
        }
    }
}

/// First-order fidelity of `seq` under `model`, where `model` is the spectrum
/// of the `σz` coefficient.
pub fn fidelity_from_spectrum(seq: &PulseSequence, model: &SpectralModel) -> Result<f64> {
    fidelity_from_spectrum_with(seq, model, IntegrationOptions::default())
}

pub fn fidelity_from_spectrum_with(
    seq: &PulseSequence,
    model: &SpectralModel,
    opts: IntegrationOptions,
) -> Result<f64> {
    model.validate()?;
    if model.amplitude == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - infidelity_integral(&FilterPlan::new(seq), model, opts)?)
}

/// Trapezoid rule in `ln ω`, doubling the density until successive results
/// agree to `opts.tolerance`.
fn infidelity_integral(plan: &FilterPlan, model: &SpectralModel, opts: IntegrationOptions) -> Result<f64> {
    let (a, b) = (model.omega_ir.ln(), model.omega_uv.ln());
    let decades = (b - a) / std::f64::consts::LN_10;
    let mut intervals = ((opts.points_per_decade as f64 * decades).ceil() as usize).max(2);
    let integrand = |x: f64| {
        let w = x.exp();
        model.psd(w) * plan.fz_over_omega2(w) * w
    };
    let h0 = (b - a) / intervals as f64;
    let mut sum: f64 = (0..=intervals)
        .into_par_iter()
        .map(|k| {
            let f = integrand(a + h0 * k as f64);
            if k == 0 || k == intervals {
                0.5 * f
            } else {
                f
            }
        })
        .sum();
    let mut prev = sum * h0 / (2.0 * PI);
    for _ in 0..opts.max_doublings {
        let h = (b - a) / intervals as f64;
        let mids: f64 = (0..intervals)
            .into_par_iter()
            .map(|k| integrand(a + h * (k as f64 + 0.5)))
            .sum();
        sum += mids;
        intervals *= 2;
        let next = sum * (0.5 * h) / (2.0 * PI);
        if (next - prev).abs() < opts.tolerance {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!(
        "fidelity integral did not settle to {:e} after {} doublings",
        opts.tolerance, opts.max_doublings
    )))
}

/// Closed-form `F_z(ω)/ω²` of the CORPSE realization of `R(x̂, π/2)`.
pub fn corpse_x90_closed_form(omega: f64, omega0: f64) -> f64 {
    let (w, r) = (omega, omega0);
    let s7 = 7f64.sqrt();
    let b = (1.0 / (2.0 * SQRT_2)).acos();
    let cos_part = -5.0 + (s7 + 1.0) * (w * (PI - 4.0 * b) / (4.0 * r)).cos() + 3.0 * (w * (PI + 2.0 * b) / r).cos()
        - (s7 - 1.0) * (3.0 * w * (PI + 4.0 * b) / (4.0 * r)).cos();
    let sin_part = (s7 - 1.0) * (w * (PI - 4.0 * b) / (4.0 * r)).sin()
        + (s7 + 1.0) * (3.0 * w * (PI + 4.0 * b) / (4.0 * r)).sin()
        - 2.0 * (w * (PI + 8.0 * b) / (2.0 * r)).sin();
    2.0 / (w * w - r * r).powi(2) * (w * w - r * r * cos_part + w * r * sin_part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{corpse_sequence, naive_x, CliffordGate, GateFamily, PulseSegment, Rotation};

    /// Composite Simpson quadrature of the defining integral.
    fn quadrature(seq: &PulseSequence, omega: f64, nodes: usize) -> Matrix3<C64> {
        let mut q = Mat2::identity();
        let mut start = 0.0;
        let mut total = Matrix3::<C64>::zeros();
        for seg in &seq.segments {
            let dur = seg.theta / seq.omega0;
            let h = dur / nodes as f64;
            for k in 0..=nodes {
                let t = k as f64 * h;
                let u = rotation_unitary(&PulseSegment::new(seg.phi, seq.omega0 * t), 0.0) * q;
                let wgt = if k == 0 || k == nodes {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = adjoint_rotation(&u).map(|x| C64::new(x, 0.0));
                total += v * C64::from_polar(wgt * h / 3.0, omega * (start + t));
            }
            q = rotation_unitary(seg, 0.0) * q;
            start += dur;
        }
        total * C64::new(0.0, -omega)
    }

    #[test]
    fn matches_quadrature() {
        let seq = CliffordGate::Xyz240.sequence(GateFamily::Corpse).with_omega0(1.3);
        for w in [0.01, 0.7, 1.3, 2.9, 11.0] {
            let r = control_matrix(&seq, w).entries;
            let q = quadrature(&seq, w, 20000);
            assert!((r - q).norm() < 1e-6 * q.norm().max(1e-3), "ω = {w}");
        }
    }

    #[test]
    fn empty_sequence_has_zero_control() {
        let seq = PulseSequence::new(
            GateFamily::Naive,
            Rotation::new([1.0, 0.0, 0.0], 0.0),
            vec![PulseSegment::new(0.3, 0.0)],
        )
        .unwrap();
        assert_eq!(control_matrix(&seq, 2.0).entries, Matrix3::zeros());
    }

    #[test]
    fn single_segment_matches_antiderivative() {
        // H = Ω σx/2 over [0, T]: the y and z rows have closed antiderivatives.
        let (w0, th, w) = (1.7, 2.3, 0.9);
        let seq = naive_x(th).with_omega0(w0);
        let r = control_matrix(&seq, w).entries;
        let t = th / w0;
        let yy = |t: f64| {
            -w * C64::from_polar(1.0, w * t) * (C64::new(w * (w0 * t).cos(), 0.0) - I * w0 * (w0 * t).sin())
                / (w * w - w0 * w0)
        };
        let yz = |t: f64| {
            w * C64::from_polar(1.0, w * t) * (I * w0 * (w0 * t).cos() + w * (w0 * t).sin()) / (w * w - w0 * w0)
        };
        assert!((r[(1, 1)] - (yy(t) - yy(0.0))).norm() < 1e-10);
        assert!((r[(1, 2)] - (yz(t) - yz(0.0))).norm() < 1e-10);
        assert!((r[(2, 1)] + (yz(t) - yz(0.0))).norm() < 1e-10);
    }

    #[test]
    fn conjugate_symmetry() {
        let plan = FilterPlan::new(&CliffordGate::Z90.sequence(GateFamily::Geometric));
        let a = plan.control(0.8).entries;
        let b = plan.control(-0.8).entries;
        assert!((a - b.map(|z| z.conj())).norm() < 1e-12);
    }

    #[test]
    fn resonant_frequency_is_regular() {
        let plan = FilterPlan::new(&naive_x(PI));
        let at = plan.fz(1.0);
        let near = plan.fz(1.0 + 1e-7);
        assert!(at.is_finite() && (at - near).abs() < 1e-6);
    }

    #[test]
    fn corpse_closed_form() {
        let seq = corpse_sequence(0.0, PI / 2.0).unwrap();
        let plan = FilterPlan::new(&seq);
        for w in log_grid(1e-3, 1e2, 50) {
            let a = corpse_x90_closed_form(w, 1.0);
            let n = plan.fz_over_omega2(w);
            assert!((a - n).abs() <= 1e-6 * n.abs(), "ω = {w}: {a} vs {n}");
        }
    }

    #[test]
    fn zero_amplitude_is_perfect() {
        let m = SpectralModel::new(0.0, 1.0, 1.0, 1e-3, 1e2).unwrap();
        assert_eq!(fidelity_from_spectrum(&naive_x(1.0), &m).unwrap(), 1.0);
    }

    #[test]
    fn csv_columns() {
        let f = filter_fn(&naive_x(1.0).with_omega0(2.0), &[1.0, 4.0]);
        let mut buf = Vec::new();
        f.write_csv(2.0, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("omega_over_omega0,Fz_over_omega2\n5.000000000e-1,"));
    }
}
