//! 1/f^α detuning noise: spectral model, amplitude calibration, time-domain
//! synthesis and spectral estimation.
//!
//! The spectrum is `S(ω) = A / (ω t0)^α` on `[ω_ir, ω_uv]` and zero outside.
//! It is normalized so that the variance of the noise is `(1/π)∫ S dω`.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Synthesis frequencies per decade of bandwidth.
pub const DEFAULT_POINTS_PER_DECADE: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    #[serde(rename = "amplitude_a")]
    pub amplitude: f64,
    pub alpha: f64,
    pub t0: f64,
    pub omega_ir: f64,
    pub omega_uv: f64,
}

/// What quantity a spectrum describes.
///
/// Under `QubitFrequency`, `S` is the spectrum of `δω_q` itself and a
/// calibration to `σ` fixes `(1/π)∫S dω = σ²`. Under `SigmaZCoefficient`, `S`
/// is the spectrum of the coefficient `δω_q/2` multiplying `σz`, which is a
/// quarter of the former; the filter-function fidelity expects this one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdConvention {
    QubitFrequency,
    #[default]
    SigmaZCoefficient,
}

impl PsdConvention {
    /// Factor converting a spectrum in this convention to the `δω_q` spectrum.
    pub fn to_qubit_frequency(self) -> f64 {
        match self {
            PsdConvention::QubitFrequency => 1.0,
            PsdConvention::SigmaZCoefficient => 4.0,
        }
    }
}

impl SpectralModel {
    pub fn new(amplitude: f64, alpha: f64, t0: f64, omega_ir: f64, omega_uv: f64) -> Result<Self> {
        let m = Self {
            amplitude,
            alpha,
            t0,
            omega_ir,
            omega_uv,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_ir > 0.0 && self.omega_ir < self.omega_uv && self.omega_uv.is_finite()) {
            return Err(Error::CutoffOrder {
                ir: self.omega_ir,
                uv: self.omega_uv,
            });
        }
        if !(0.5..=2.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0.5, 2], got {}",
                self.alpha
            )));
        }
        if !(self.amplitude >= 0.0 && self.t0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need amplitude >= 0 and t0 > 0, got {} and {}",
                self.amplitude, self.t0
            )));
        }
        Ok(())
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    /// `S(ω)`, zero outside the cutoffs.
    pub fn psd(&self, omega: f64) -> f64 {
        let w = omega.abs();
        if w < self.omega_ir || w > self.omega_uv {
            0.0
        } else {
            self.amplitude * (w * self.t0).powf(-self.alpha)
        }
    }

    /// `∫_lo^hi S(ω) dω` clipped to the band.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.amplitude * unit_band_integral(self.alpha, self.t0, lo.max(self.omega_ir), hi.min(self.omega_uv))
    }

    /// `(1/π)∫ S dω`.
    pub fn variance(&self) -> f64 {
        self.band_power(self.omega_ir, self.omega_uv) / PI
    }

    /// Model with `A` chosen so that the described quantity has standard
    /// deviation `sigma` under `convention`.
    pub fn calibrated(
        sigma: f64,
        alpha: f64,
        t0: f64,
        omega_ir: f64,
        omega_uv: f64,
        convention: PsdConvention,
    ) -> Result<Self> {
        let m = Self::new(0.0, alpha, t0, omega_ir, omega_uv)?;
        let a = calibrate_amplitude(sigma, &m)? / convention.to_qubit_frequency();
        Ok(m.with_amplitude(a))
    }
}

/// `∫_lo^hi (ω t0)^−α dω`.
fn unit_band_integral(alpha: f64, t0: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if (alpha - 1.0).abs() < 1e-12 {
        (hi / lo).ln() / t0
    } else {
        let p = 1.0 - alpha;
        t0.powf(-alpha) * (hi.powf(p) - lo.powf(p)) / p
    }
}

/// Amplitude `A` such that `∫ A/(ω t0)^α dω = π σ²` over the model's band.
///
/// The amplitude stored in `model` is ignored.
pub fn calibrate_amplitude(sigma: f64, model: &SpectralModel) -> Result<f64> {
    model.with_amplitude(0.0).validate()?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    Ok(PI * sigma * sigma / unit_band_integral(model.alpha, model.t0, model.omega_ir, model.omega_uv))
}

/// Either a 1/f^α process or a single Gaussian offset per realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    OneOverF(SpectralModel),
    QuasiStatic { sigma: f64 },
}

impl NoiseModel {
    /// One realization drawn from `rng`.
    pub fn realize<R: Rng>(&self, rng: &mut R) -> Realization {
        match self {
            NoiseModel::OneOverF(m) => Realization::Tones(ToneBank::sample(m, DEFAULT_POINTS_PER_DECADE, rng)),
            NoiseModel::QuasiStatic { sigma } => {
                let d = if *sigma > 0.0 {
                    Normal::new(0.0, *sigma).expect("finite sigma").sample(rng)
                } else {
                    0.0
                };
                Realization::Constant(d)
            }
        }
    }

    /// Scales the noise amplitude (not the power) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            NoiseModel::OneOverF(m) => NoiseModel::OneOverF(m.with_amplitude(m.amplitude * factor * factor)),
            NoiseModel::QuasiStatic { sigma } => NoiseModel::QuasiStatic { sigma: sigma * factor },
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            NoiseModel::OneOverF(m) => m.variance(),
            NoiseModel::QuasiStatic { sigma } => sigma * sigma,
        }
    }
}

/// RNG for realization `index` of an ensemble started at `base_seed`.
pub fn realization_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(index))
}

/// A sampled noise realization that can be evaluated at any time.
#[derive(Clone, Debug)]
pub enum Realization {
    Tones(ToneBank),
    Constant(f64),
}

impl Realization {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Realization::Tones(b) => b.value(t),
            Realization::Constant(d) => *d,
        }
    }

    /// Averages over consecutive steps `[t0 + j h, t0 + (j+1) h]` for `j < out.len()`.
    pub fn fill_step_averages(&self, t0: f64, h: f64, out: &mut [f64]) {
        match self {
            Realization::Tones(b) => b.fill(t0 + 0.5 * h, h, true, out),
            Realization::Constant(d) => out.fill(*d),
        }
    }
}

/// Random-phase sum of cosines `Σ a_k cos(ω_k t + φ_k)`.
///
/// The band is split into logarithmic bins; each bin contributes one tone at
/// a log-uniformly jittered frequency carrying the bin's integrated power.
#[derive(Clone, Debug, Default)]
pub struct ToneBank {
    pub omega: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
}

impl ToneBank {
    pub fn sample<R: Rng>(model: &SpectralModel, points_per_decade: usize, rng: &mut R) -> Self {
        let ratio = model.omega_uv / model.omega_ir;
        let bins = ((ratio.log10() * points_per_decade as f64).ceil() as usize).max(1);
        let step = ratio.ln() / bins as f64;
        let mut bank = ToneBank::default();
        for k in 0..bins {
            let lo = model.omega_ir * (step * k as f64).exp();
            let hi = model.omega_ir * (step * (k + 1) as f64).exp();
            let u: f64 = rng.random();
            let phi: f64 = rng.random::<f64>() * 2.0 * PI;
            let p = model.band_power(lo, hi);
            bank.omega.push(lo * (u * step).exp());
            bank.amplitude.push((2.0 * p / PI).sqrt());
            bank.phase.push(phi);
        }
        bank
    }

    pub fn value(&self, t: f64) -> f64 {
        self.omega
            .iter()
            .zip(&self.amplitude)
            .zip(&self.phase)
            .map(|((w, a), p)| a * (w * t + p).cos())
            .sum()
    }

    /// Samples at `t_first + j h`, either pointwise or averaged over a window
    /// of width `h` centred on each sample.
    pub fn fill(&self, t_first: f64, h: f64, averaged: bool, out: &mut [f64]) {
        out.fill(0.0);
        for ((&w, &a), &p) in self.omega.iter().zip(&self.amplitude).zip(&self.phase) {
            let gain = if averaged { a * sinc(0.5 * w * h) } else { a };
            let (s0, c0) = (w * t_first + p).sin_cos();
            let (sd, cd) = (w * h).sin_cos();
            let (mut re, mut im) = (c0, s0);
            for (j, o) in out.iter_mut().enumerate() {
                // Re-anchor periodically so the rotation recurrence cannot drift.
                if j % 4096 == 0 && j > 0 {
                    let (s, c) = (w * (t_first + j as f64 * h) + p).sin_cos();
                    re = c;
                    im = s;
                }
                *o += gain * re;
                let nre = re * cd - im * sd;
                im = re * sd + im * cd;
                re = nre;
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Uniformly sampled noise `δω_q(t)` in rad/ns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
}

impl NoiseTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |j| j as f64 * self.dt)
    }

    /// Sample variance about the mean.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        self.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_ns,delta_rad_per_ns")?;
        for (t, x) in self.times().zip(&self.samples) {
            writeln!(w, "{t:.9e},{x:.12e}")?;
        }
        Ok(())
    }
}

/// Draws a trace of `n` samples spaced by `dt`, reproducibly from `seed`.
pub fn generate_trace(model: &SpectralModel, dt: f64, n: usize, seed: u64) -> Result<NoiseTrace> {
    model.validate()?;
    let max = PI / model.omega_uv;
    if !(dt > 0.0 && dt <= max) {
        return Err(Error::Resolution { dt, max });
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "trace needs at least 2 samples, got {n}"
        )));
    }
    let mut samples = vec![0.0; n];
    if model.amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bank = ToneBank::sample(model, DEFAULT_POINTS_PER_DECADE, &mut rng);
        bank.fill(0.0, dt, false, &mut samples);
    }
    Ok(NoiseTrace { dt, samples, seed })
}

/// Draws a constant trace from the quasi-static model.
pub fn generate_quasistatic_trace(sigma: f64, dt: f64, n: usize, seed: u64) -> Result<NoiseTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = NoiseModel::QuasiStatic { sigma }.realize(&mut rng).value(0.0);
    Ok(NoiseTrace {
        dt,
        samples: vec![d; n],
        seed,
    })
}

/// One-sided power spectral density in angular frequency.
///
/// `∫ density dω` over all bins equals the variance of the input, so a model
/// spectrum `S` shows up as `S/π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
}

impl Psd {
    pub fn d_omega(&self) -> f64 {
        if self.omega.len() > 1 {
            self.omega[1] - self.omega[0]
        } else {
            0.0
        }
    }

    /// Sum of `density · Δω` over bins with `lo ≤ ω ≤ hi`.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let dw = self.d_omega();
        self.omega
            .iter()
            .zip(&self.density)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(_, p)| p * dw)
            .sum()
    }

    /// Least-squares slope of `log P` against `log ω` over `[lo, hi]`.
    pub fn log_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .omega
            .iter()
            .zip(&self.density)
            .filter(|(w, p)| **w >= lo && **w <= hi && **p > 0.0)
            .map(|(w, p)| (w.ln(), p.ln()))
            .collect();
        linear_slope(&pts)
    }

    /// Mean density over `[lo, hi]`.
    pub fn mean_density(&self, lo: f64, hi: f64) -> f64 {
        let sel: Vec<f64> = self
            .omega
            .iter()
            .zip(&self.density)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(_, p)| *p)
            .collect();
        sel.iter().sum::<f64>() / sel.len().max(1) as f64
    }
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub const MIN_PSD_SAMPLES: usize = 1024;

/// Welch estimate with a Hann window, 50 % overlap and segment length
/// `n/8` rounded down to a power of two (at least 256).
pub fn psd_estimate(trace: &NoiseTrace) -> Result<Psd> {
    let n = trace.len();
    if n < MIN_PSD_SAMPLES {
        return Err(Error::TooShort {
            len: n,
            min: MIN_PSD_SAMPLES,
        });
    }
    let seg = (1usize << (n / 8).ilog2()).max(256);
    psd_estimate_with(trace, seg)
}

pub fn psd_estimate_with(trace: &NoiseTrace, segment_len: usize) -> Result<Psd> {
    let n = trace.len();
    if n < MIN_PSD_SAMPLES {
        return Err(Error::TooShort {
            len: n,
            min: MIN_PSD_SAMPLES,
        });
    }
    let seg = segment_len.min(n);
    let window: Vec<f64> = (0..seg)
        .map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / seg as f64).cos())
        .collect();
    let wsum: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg);
    let bins = seg / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); seg];
    let hop = seg / 2;
    let mut count = 0usize;
    let mut start = 0;
    while start + seg <= n {
        let chunk = &trace.samples[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for ((b, x), w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let dt = trace.dt;
    let d_omega = 2.0 * PI / (seg as f64 * dt);
    let omega = (0..bins).map(|k| k as f64 * d_omega).collect();
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let edge = k == 0 || (seg.is_multiple_of(2) && k == bins - 1);
            let one_sided = if edge { 1.0 } else { 2.0 };
            one_sided * a / count as f64 * dt / (wsum * 2.0 * PI)
        })
        .collect();
    Ok(Psd { omega, density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn unit_model() -> SpectralModel {
        SpectralModel::new(1.0, 1.0, 1.0, 0.01, 10.0).unwrap()
    }

    #[test]
    fn closed_form_calibration() {
        let m = SpectralModel::new(0.0, 1.0, 1.0, 1.0, E).unwrap();
        assert!((calibrate_amplitude(1.0, &m).unwrap() - PI).abs() < 1e-12);
        assert_eq!(calibrate_amplitude(0.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_order_is_checked() {
        assert!(matches!(
            SpectralModel::new(1.0, 1.0, 1.0, 2.0, 1.0),
            Err(Error::CutoffOrder { .. })
        ));
    }

    #[test]
    fn calibrated_variance_round_trips() {
        for alpha in [0.7, 1.0, 1.6] {
            let m = SpectralModel::calibrated(0.3, alpha, 2.0, 0.01, 50.0, PsdConvention::QubitFrequency).unwrap();
            assert!((m.variance() - 0.09).abs() < 1e-12);
            let q = SpectralModel::calibrated(0.3, alpha, 2.0, 0.01, 50.0, PsdConvention::SigmaZCoefficient).unwrap();
            assert!((4.0 * q.amplitude - m.amplitude).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_trace() {
        let t = generate_trace(&unit_model().with_amplitude(0.0), 0.1, 100, 3).unwrap();
        assert!(t.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn traces_are_deterministic() {
        let a = generate_trace(&unit_model(), 0.1, 500, 42).unwrap();
        let b = generate_trace(&unit_model(), 0.1, 500, 42).unwrap();
        let c = generate_trace(&unit_model(), 0.1, 500, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn coarse_step_is_rejected() {
        assert!(matches!(
            generate_trace(&unit_model(), 1.0, 100, 0),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn recurrence_matches_direct_evaluation() {
        let mut rng = realization_rng(7, 0);
        let bank = ToneBank::sample(&unit_model(), 40, &mut rng);
        let mut out = vec![0.0; 9000];
        bank.fill(0.3, 0.05, false, &mut out);
        for j in [0, 1, 4095, 4096, 8999] {
            assert!((out[j] - bank.value(0.3 + 0.05 * j as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn step_average_matches_quadrature() {
        let mut rng = realization_rng(1, 0);
        let r = Realization::Tones(ToneBank::sample(&unit_model(), 40, &mut rng));
        let h = 0.2;
        let mut out = vec![0.0; 3];
        r.fill_step_averages(1.0, h, &mut out);
        let n = 2000;
        let quad: f64 = (0..n)
            .map(|k| r.value(1.0 + h + (k as f64 + 0.5) * h / n as f64))
            .sum::<f64>()
            / n as f64;
        assert!((out[1] - quad).abs() < 1e-6);
    }

    #[test]
    fn too_short_for_psd() {
        let t = NoiseTrace {
            dt: 1.0,
            samples: vec![0.0; 100],
            seed: 0,
        };
        assert!(matches!(psd_estimate(&t), Err(Error::TooShort { .. })));
    }

    #[test]
    fn cosine_power_by_parseval() {
        let a = 0.7;
        let samples = (0..8192).map(|j| a * (1.3 * j as f64 * 0.1 + 0.4).cos()).collect();
        let t = NoiseTrace {
            dt: 0.1,
            samples,
            seed: 0,
        };
        let p = psd_estimate(&t).unwrap();
        let total = p.integrate(0.0, f64::INFINITY);
        assert!((total / (a * a / 2.0) - 1.0).abs() < 0.05, "{total}");
    }

    #[test]
    fn white_noise_is_flat() {
        let mut rng = realization_rng(5, 0);
        let normal = Normal::new(0.0, 1.5).unwrap();
        let samples: Vec<f64> = (0..1 << 15).map(|_| normal.sample(&mut rng)).collect();
        let t = NoiseTrace {
            dt: 0.5,
            samples,
            seed: 5,
        };
        let v = t.variance();
        let p = psd_estimate(&t).unwrap();
        assert!((p.integrate(0.0, f64::INFINITY) / v - 1.0).abs() < 0.1);
        let nyq = PI / 0.5;
        let low = p.mean_density(0.05 * nyq, 0.3 * nyq);
        let high = p.mean_density(0.6 * nyq, 0.9 * nyq);
        assert!((low / high - 1.0).abs() < 0.1);
    }

    #[test]
    fn csv_header() {
        let t = NoiseTrace {
            dt: 0.5,
            samples: vec![1.0, 2.0],
            seed: 0,
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t_ns,delta_rad_per_ns\n0.000000000e0,"));
        assert_eq!(s.lines().count(), 3);
    }
}
