//! Time-domain propagation of the driven three-level system and Monte-Carlo
//! gate fidelities.
//!
//! In the frame rotating with the bare eigenenergies the drive
//! `ε_AC cos(ωt + φ_d)` couples every pair of levels:
//!
//! ```text
//! H_mn(t) = δE_n δ_mn + ε_AC cos(ωt + φ_d) d_mn e^{i(E_m − E_n)t}
//! ```
//!
//! Matrices here are ordered `(g, e, f)`. Pulse phases are given in the qubit
//! frame; the carrier phase adds `arg d_eg` so that a segment with phase `φ`
//! produces `Ω0/2 (cos φ σx + sin φ σy)` on `{|0⟩ = |e⟩, |1⟩ = |g⟩}` under the
//! rotating-wave approximation.

use crate::error::{Error, Result};
use crate::hamiltonian::{DriveConfig, EigenSystem, E, F, G};
use crate::linalg::{c, su2_exp, unitary_step3, Mat2, Mat3, C64};
use crate::metrics::{average_gate_fidelity, trace_fidelity};
use crate::noise::{realization_rng, NoiseModel, NoiseTrace, PsdConvention};
use crate::pulses::PulseSequence;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const TRACE_TOLERANCE: f64 = 1e-9;
pub const POSITIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct RotatingFrameModel {
    pub eigen: EigenSystem,
    pub drive: DriveConfig,
    pub rwa: bool,
    /// Detuning noise `δε(t)`, shifting each level by `d_nn δε`.
    pub noise: Option<NoiseTrace>,
}

impl RotatingFrameModel {
    pub fn new(eigen: EigenSystem, drive: DriveConfig, rwa: bool) -> Self {
        Self {
            eigen,
            drive,
            rwa,
            noise: None,
        }
    }

    pub fn with_noise(mut self, trace: NoiseTrace) -> Self {
        self.noise = Some(trace);
        self
    }

    /// `Ω0 = |d_ge| ε_AC`.
    pub fn rabi_frequency(&self) -> f64 {
        self.eigen.d_ge().abs() * self.drive.eps_ac
    }

    /// Carrier phase for a qubit-frame phase `phi`.
    pub fn carrier_phase(&self, phi: f64) -> f64 {
        let d = self.eigen.d(E, G);
        phi + if d < 0.0 { std::f64::consts::PI } else { 0.0 }
    }

    fn detuning_noise(&self, t: f64) -> f64 {
        let Some(tr) = &self.noise else { return 0.0 };
        let x = t / tr.dt;
        if x < 0.0 {
            return 0.0;
        }
        let j = x.floor() as usize;
        match (tr.samples.get(j), tr.samples.get(j + 1)) {
            (Some(a), Some(b)) => a + (b - a) * (x - j as f64),
            (Some(a), None) => *a,
            _ => 0.0,
        }
    }

    /// Fastest frequency in `h_rot`, used to pick a step.
    pub fn fastest_frequency(&self) -> f64 {
        let e = &self.eigen.energies;
        self.drive.omega + (e[F] - e[G])
    }

    /// `(2π/ω_max)/20`.
    pub fn default_time_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.fastest_frequency() / 20.0
    }
}

/// Rotating-frame Hamiltonian at time `t` while a segment with qubit-frame
/// phase `phi` plays.
pub fn h_rot(model: &RotatingFrameModel, t: f64, phi: f64) -> Mat3 {
    let es = &model.eigen;
    let eps = model.drive.eps_ac;
    let w = model.drive.omega;
    let phase = model.carrier_phase(phi);
    let de = model.detuning_noise(t);
    let mut h = Mat3::zeros();
    for n in 0..3 {
        h[(n, n)] = c(es.d(n, n) * de, 0.0);
    }
    if model.rwa {
        // Co-rotating part of the e–g coupling only; |f⟩ decouples.
        let gap = es.energies[E] - es.energies[G];
        let v = C64::from_polar(0.5 * eps * es.d(E, G), (gap - w) * t - phase);
        h[(E, G)] = v;
        h[(G, E)] = v.conj();
        return h;
    }
    let carrier = eps * (w * t + phase).cos();
    for m in 0..3 {
        for n in 0..3 {
            let gap = es.energies[m] - es.energies[n];
            h[(m, n)] += C64::from_polar(carrier * es.d(m, n), gap * t);
        }
    }
    h
}

/// Hermitian, unit-trace 3×3 state in the `(g, e, f)` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix3(pub Mat3);

impl DensityMatrix3 {
    pub fn pure(level: usize) -> Self {
        let mut m = Mat3::zeros();
        m[(level, level)] = c(1.0, 0.0);
        Self(m)
    }

    /// Qubit state `|0⟩ = |e⟩`.
    pub fn zero() -> Self {
        Self::pure(E)
    }

    /// Qubit state `|1⟩ = |g⟩`.
    pub fn one() -> Self {
        Self::pure(G)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `(P0, P1, Pf)` = populations of `(e, g, f)`.
    pub fn populations(&self) -> (f64, f64, f64) {
        (self.0[(E, E)].re, self.0[(G, G)].re, self.0[(F, F)].re)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.0 + self.0.adjoint()) * c(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).norm()
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix3 {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_leakage(&self) -> f64 {
        self.states.iter().map(|s| s.populations().2).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_ns,P0,P1,Pf")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let (p0, p1, pf) = s.populations();
            writeln!(w, "{t:.6e},{p0:.12e},{p1:.12e},{pf:.12e}")?;
        }
        Ok(())
    }
}

/// Steps of at most `dt` that land exactly on segment boundaries.
fn step_plan(seq: &PulseSequence, omega0: f64, dt: f64) -> Vec<(f64, usize, f64)> {
    seq.segments
        .iter()
        .map(|s| {
            let dur = s.theta / omega0;
            let n = ((dur / dt).ceil() as usize).max(1);
            (s.phi, n, dur / n as f64)
        })
        .collect()
}

/// Evolves `rho0` under `seq`.
///
/// Segment durations come from `seq.omega0`, which should normally equal
/// [`RotatingFrameModel::rabi_frequency`]. Each step applies the exponential of
/// the midpoint Hamiltonian.
pub fn propagate(
    model: &RotatingFrameModel,
    seq: &PulseSequence,
    rho0: &DensityMatrix3,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let mut rho = rho0.0;
    let mut t = 0.0;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![rho0.clone()],
    };
    for (phi, n, h) in step_plan(seq, seq.omega0, dt) {
        for _ in 0..n {
            let u = unitary_step3(&h_rot(model, t + 0.5 * h, phi), h);
            rho = u * rho * u.adjoint();
            t += h;
            let state = DensityMatrix3(rho);
            let tr = state.trace();
            if (tr - 1.0).abs() > TRACE_TOLERANCE {
                return Err(Error::TraceDrift { trace: tr });
            }
            let min = state.min_eigenvalue();
            if min < -POSITIVITY_TOLERANCE {
                return Err(Error::PositivityViolation { min_eigenvalue: min });
            }
            traj.times.push(t);
            traj.states.push(state);
        }
    }
    Ok(traj)
}

/// Halves `dt` until the final populations change by less than `tol`.
pub fn propagate_converged(
    model: &RotatingFrameModel,
    seq: &PulseSequence,
    rho0: &DensityMatrix3,
    dt: f64,
    tol: f64,
    max_halvings: usize,
) -> Result<(Trajectory, f64)> {
    let mut dt = dt;
    let mut prev = propagate(model, seq, rho0, dt)?;
    for _ in 0..max_halvings {
        dt *= 0.5;
        let next = propagate(model, seq, rho0, dt)?;
        let (a, b) = (prev.last().populations(), next.last().populations());
        let change = (a.0 - b.0).abs().max((a.1 - b.1).abs()).max((a.2 - b.2).abs());
        if change < tol {
            return Ok((next, dt));
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!(
        "populations still move by more than {tol:e} at dt = {dt:e} ns"
    )))
}

/// Full 3×3 propagator of `seq` in the `(g, e, f)` basis.
pub fn propagator(model: &RotatingFrameModel, seq: &PulseSequence, dt: f64) -> Mat3 {
    let mut u = Mat3::identity();
    let mut t = 0.0;
    for (phi, n, h) in step_plan(seq, seq.omega0, dt) {
        for _ in 0..n {
            u = unitary_step3(&h_rot(model, t + 0.5 * h, phi), h) * u;
            t += h;
        }
    }
    u
}

/// Qubit block `[[U_00, U_01], [U_10, U_11]]` with `|0⟩ = |e⟩`, `|1⟩ = |g⟩`.
pub fn qubit_block(u: &Mat3) -> Mat2 {
    Mat2::new(u[(E, E)], u[(E, G)], u[(G, E)], u[(G, G)])
}

/// Gate fidelities of the three-level run against the sequence target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub trace_fidelity: f64,
    pub average_gate_fidelity: f64,
    pub leakage: f64,
}

pub fn gate_report(model: &RotatingFrameModel, seq: &PulseSequence, dt: f64) -> GateReport {
    let u = propagator(model, seq, dt);
    let block = qubit_block(&u);
    let target = seq.target.unitary();
    GateReport {
        trace_fidelity: trace_fidelity(&target, &block),
        average_gate_fidelity: average_gate_fidelity(&target, &block),
        leakage: 0.5 * (u[(F, E)].norm_sqr() + u[(F, G)].norm_sqr()),
    }
}

/// How each Monte-Carlo realization is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityMetric {
    /// `|Tr(U_t† U)|/2`, the quantity the filter-function fidelity predicts.
    #[default]
    Trace,
    AverageGate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOptions {
    /// Convention of the spectrum in a [`NoiseModel::OneOverF`].
    pub convention: PsdConvention,
    pub metric: FidelityMetric,
    /// Step size in ns; defaults to a value resolving both `ω_uv` and `Ω0`.
    pub dt: Option<f64>,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            convention: PsdConvention::SigmaZCoefficient,
            metric: FidelityMetric::Trace,
            dt: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl MonteCarloReport {
    fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
            seed,
        }
    }
}

pub const MIN_REALIZATIONS: usize = 100;

/// Mean fidelity of `seq` in the two-level model
/// `H = Ω0/2 (cos φ σx + sin φ σy) + δω_q(t)/2 σz` over `n` noise draws.
pub fn monte_carlo_fidelity(
    seq: &PulseSequence,
    noise: &NoiseModel,
    n: usize,
    seed: u64,
    opts: MonteCarloOptions,
) -> Result<MonteCarloReport> {
    Ok(monte_carlo_fidelities(std::slice::from_ref(seq), noise, n, seed, opts)?[0])
}

/// Like [`monte_carlo_fidelity`] for several sequences, each realization being
/// shared by all of them.
pub fn monte_carlo_fidelities(
    seqs: &[PulseSequence],
    noise: &NoiseModel,
    n: usize,
    seed: u64,
    opts: MonteCarloOptions,
) -> Result<Vec<MonteCarloReport>> {
    if n < MIN_REALIZATIONS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_REALIZATIONS} realizations, got {n}"
        )));
    }
    let noise = match noise {
        NoiseModel::OneOverF(m) => {
            m.validate()?;
            NoiseModel::OneOverF(*m).scaled(opts.convention.to_qubit_frequency().sqrt())
        }
        q => *q,
    };
    let dt = opts.dt.unwrap_or_else(|| default_mc_step(seqs, &noise));
    let per_draw: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = realization_rng(seed, k);
            let draw = noise.realize(&mut rng);
            let mut buf = Vec::new();
            seqs.iter()
                .map(|seq| {
                    let mut u = Mat2::identity();
                    let mut t = 0.0;
                    for (phi, steps, h) in step_plan(seq, seq.omega0, dt) {
                        buf.resize(steps, 0.0);
                        draw.fill_step_averages(t, h, &mut buf);
                        let (s, co) = phi.sin_cos();
                        let half = 0.5 * seq.omega0 * h;
                        for d in &buf {
                            u = su2_exp([co * half, s * half, 0.5 * d * h]) * u;
                        }
                        t += steps as f64 * h;
                    }
                    let target = seq.target.unitary();
                    match opts.metric {
                        FidelityMetric::Trace => trace_fidelity(&target, &u),
                        FidelityMetric::AverageGate => average_gate_fidelity(&target, &u),
                    }
                })
                .collect()
        })
        .collect();
    Ok((0..seqs.len())
        .map(|i| {
            let col: Vec<f64> = per_draw.iter().map(|r| r[i]).collect();
            MonteCarloReport::from_samples(&col, seed)
        })
        .collect())
}

fn default_mc_step(seqs: &[PulseSequence], noise: &NoiseModel) -> f64 {
    let w0 = seqs.iter().map(|s| s.omega0).fold(0.0, f64::max);
    let by_rabi = 2.0 * std::f64::consts::PI / w0 / 100.0;
    match noise {
        NoiseModel::OneOverF(m) => by_rabi.min(std::f64::consts::PI / (2.0 * m.omega_uv)),
        NoiseModel::QuasiStatic { .. } => by_rabi,
    }
}
