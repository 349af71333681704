//! Piecewise-constant control sequences for the four gate families.
//!
//! A segment `(φ, θ)` plays `H = Ω0/2 (cos φ σx + sin φ σy)` for a time
//! `θ/Ω0`. With a quasi-static detuning `δ` the segment realizes
//!
//! ```text
//! R_δ(φ, θ) = exp[−i (½(cos φ σx + sin φ σy) + δ/(2Ω0) σz) θ]
//! ```
//!
//! Segments are stored in time order, so the sequence unitary is the
//! product `U_n ⋯ U_2 U_1`.

use crate::error::{Error, Result};
use crate::linalg::{phase_distance, rotation, su2_exp, Mat2};
use crate::metrics::trace_fidelity;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateFamily {
    Naive,
    Corpse,
    Geometric,
    NonCyclic,
}

impl GateFamily {
    pub const ALL: [GateFamily; 4] = [
        GateFamily::Naive,
        GateFamily::Corpse,
        GateFamily::Geometric,
        GateFamily::NonCyclic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateFamily::Naive => "naive",
            GateFamily::Corpse => "corpse",
            GateFamily::Geometric => "geometric",
            GateFamily::NonCyclic => "non_cyclic",
        }
    }
}

impl fmt::Display for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "naive" => Ok(GateFamily::Naive),
            "corpse" => Ok(GateFamily::Corpse),
            "geometric" | "geo" => Ok(GateFamily::Geometric),
            "non_cyclic" | "noncyclic" | "non" => Ok(GateFamily::NonCyclic),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

/// One constant-Hamiltonian piece: drive phase and pulse area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    #[serde(rename = "phi_rad")]
    pub phi: f64,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
}

impl PulseSegment {
    pub fn new(phi: f64, theta: f64) -> Self {
        Self { phi, theta }
    }

    /// In-plane rotation axis `(cos φ, sin φ, 0)`.
    pub fn axis(&self) -> [f64; 3] {
        [self.phi.cos(), self.phi.sin(), 0.0]
    }
}

/// A rotation by `angle` about the unit vector `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl Rotation {
    /// Normalizes `axis`.
    pub fn new(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        Self {
            axis: [axis[0] / n, axis[1] / n, axis[2] / n],
            angle,
        }
    }

    pub fn unitary(&self) -> Mat2 {
        rotation(self.axis, self.angle)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub family: GateFamily,
    pub target: Rotation,
    /// Rabi angular frequency `Ω0` in rad/ns.
    pub omega0: f64,
    pub segments: Vec<PulseSegment>,
}

impl PulseSequence {
    /// Builds a sequence with `Ω0 = 1`; rescale with [`with_omega0`](Self::with_omega0).
    pub fn new(family: GateFamily, target: Rotation, segments: Vec<PulseSegment>) -> Result<Self> {
        if let Some(s) = segments.iter().find(|s| !(s.theta >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "segment area must be >= 0, got {}",
                s.theta
            )));
        }
        Ok(Self {
            family,
            target,
            omega0: 1.0,
            segments,
        })
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        assert!(omega0 > 0.0, "omega0 must be positive");
        self.omega0 = omega0;
        self
    }

    pub fn total_area(&self) -> f64 {
        self.segments.iter().map(|s| s.theta).sum()
    }

    /// Gate time in ns.
    pub fn duration(&self) -> f64 {
        self.total_area() / self.omega0
    }

    /// Sequence unitary under a quasi-static detuning `δ = delta_over_omega0·Ω0`.
    pub fn unitary(&self, delta_over_omega0: f64) -> Mat2 {
        self.segments
            .iter()
            .fold(Mat2::identity(), |acc, s| rotation_unitary(s, delta_over_omega0) * acc)
    }

    /// Phase-stripped Frobenius distance between the noiseless unitary and the target.
    pub fn target_error(&self) -> f64 {
        phase_distance(&self.unitary(0.0), &self.target.unitary())
    }

    /// `|Tr(U_t† U_δ)|/2`.
    pub fn trace_fidelity(&self, delta_over_omega0: f64) -> f64 {
        trace_fidelity(&self.target.unitary(), &self.unitary(delta_over_omega0))
    }
}

/// `R_δ(φ, θ)` for one segment.
pub fn rotation_unitary(seg: &PulseSegment, delta_over_omega0: f64) -> Mat2 {
    let h = 0.5 * seg.theta;
    su2_exp([seg.phi.cos() * h, seg.phi.sin() * h, delta_over_omega0 * h])
}

/// Maps a signed rotation about an in-plane axis onto a segment with `θ ≥ 0`.
pub fn signed_segment(phi: f64, theta: f64) -> PulseSegment {
    if theta < 0.0 {
        PulseSegment::new(phi + PI, -theta)
    } else {
        PulseSegment::new(phi, theta)
    }
}

/// Short CORPSE replacement of an in-plane rotation `(φ, θ)`.
pub fn corpse_segments(phi: f64, theta: f64) -> [PulseSegment; 3] {
    let base = signed_segment(phi, theta);
    let a = ((base.theta / 2.0).sin() / 2.0).asin();
    [
        PulseSegment::new(base.phi, base.theta / 2.0 - a),
        PulseSegment::new(base.phi + PI, TWO_PI - 2.0 * a),
        PulseSegment::new(base.phi, base.theta / 2.0 - a),
    ]
}

pub fn corpse_sequence(phi: f64, theta: f64) -> Result<PulseSequence> {
    if !(theta.abs() < TWO_PI) {
        return Err(Error::InvalidParameter(format!(
            "CORPSE needs |theta| < 2π, got {theta}"
        )));
    }
    let target = Rotation::new([phi.cos(), phi.sin(), 0.0], theta);
    PulseSequence::new(GateFamily::Corpse, target, corpse_segments(phi, theta).to_vec())
}

/// Cyclic geometric gate `exp(+iγ' n·σ)` with `n = (sin θ' cos φ', sin θ' sin φ', cos θ')`.
///
/// Three π-area pieces close a loop of total area 2π; the middle phase jump
/// `γ'` sets the geometric phase.
pub fn geometric_sequence(theta_p: f64, phi_p: f64, gamma_p: f64) -> Result<PulseSequence> {
    if !(0.0..=PI).contains(&theta_p) {
        return Err(Error::InvalidParameter(format!(
            "theta' must lie in [0, π], got {theta_p}"
        )));
    }
    let axis = [theta_p.sin() * phi_p.cos(), theta_p.sin() * phi_p.sin(), theta_p.cos()];
    let segments = vec![
        PulseSegment::new(phi_p - FRAC_PI_2, theta_p),
        PulseSegment::new(phi_p + gamma_p - FRAC_PI_2, PI),
        PulseSegment::new(phi_p - FRAC_PI_2, PI - theta_p),
    ];
    PulseSequence::new(GateFamily::Geometric, Rotation::new(axis, -2.0 * gamma_p), segments)
}

/// Two-piece non-cyclic geometric gate.
pub fn non_cyclic_sequence(chi0: f64, phi0: f64, phi1: f64, beta0: f64) -> Result<PulseSequence> {
    if !(chi0 > 0.0) {
        return Err(Error::NonPositiveArea(chi0));
    }
    if !(beta0 > 0.0) {
        return Err(Error::NonPositiveArea(beta0));
    }
    let u = non_cyclic_unitary(chi0, phi0, phi1, beta0);
    let segments = vec![
        PulseSegment::new(phi0 + FRAC_PI_2, chi0),
        PulseSegment::new(phi0 + phi1 + FRAC_PI_2, beta0),
    ];
    PulseSequence::new(GateFamily::NonCyclic, rotation_of(&u), segments)
}

/// Closed-form product of the two non-cyclic pieces.
pub fn non_cyclic_unitary(chi0: f64, phi0: f64, phi1: f64, beta0: f64) -> Mat2 {
    use crate::linalg::C64;
    let (sc, cc) = (chi0 / 2.0).sin_cos();
    let (sb, cb) = (beta0 / 2.0).sin_cos();
    let e = |x: f64| C64::from_polar(1.0, x);
    Mat2::new(
        cc * cb - sc * sb * e(-phi1),
        -(cc * sb * e(-(phi0 + phi1))) - cb * sc * e(-phi0),
        cc * sb * e(phi0 + phi1) + cb * sc * e(phi0),
        cc * cb - sc * sb * e(phi1),
    )
}

/// Axis and angle of an SU(2) matrix, with the angle in `[0, 2π]`.
pub fn rotation_of(u: &Mat2) -> Rotation {
    // Divide out √det so that v = cos(a/2) I − i sin(a/2) n·σ.
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phase = det.sqrt().conj();
    let v = u * phase;
    let c = (0.5 * (v[(0, 0)] + v[(1, 1)])).re.clamp(-1.0, 1.0);
    let nx = -(0.5 * (v[(0, 1)] + v[(1, 0)])).im;
    let ny = (0.5 * (v[(1, 0)] - v[(0, 1)])).re;
    let nz = -(0.5 * (v[(0, 0)] - v[(1, 1)])).im;
    let s = (nx * nx + ny * ny + nz * nz).sqrt();
    if s < 1e-15 {
        return Rotation::new([0.0, 0.0, 1.0], if c > 0.0 { 0.0 } else { TWO_PI });
    }
    Rotation::new([nx / s, ny / s, nz / s], 2.0 * s.atan2(c))
}

/// Non-cyclic realization of `R(x̂, γ)` with the default areas
/// `χ0 = 0.01γ`, `β0 = 1.01γ`.
pub fn non_cyclic_x(gamma: f64) -> Result<PulseSequence> {
    non_cyclic_sequence(0.01 * gamma, FRAC_PI_2, PI, 1.01 * gamma)
}

/// Geometric realization of `R(x̂, γ)`.
pub fn geometric_x(gamma: f64) -> Result<PulseSequence> {
    geometric_sequence(FRAC_PI_2, 0.0, -gamma / 2.0)
}

/// Single-segment realization of `R(x̂, γ)`.
pub fn naive_x(gamma: f64) -> PulseSequence {
    let target = Rotation::new([1.0, 0.0, 0.0], gamma);
    PulseSequence::new(GateFamily::Naive, target, vec![signed_segment(0.0, gamma)])
        .expect("signed segment has nonnegative area")
}

/// The four representative single-qubit gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CliffordGate {
    /// `R(x̂, π/2)`
    #[serde(rename = "x90")]
    X90,
    /// `R(ẑ, π/2)`
    #[serde(rename = "z90")]
    Z90,
    /// `R(x̂ + ẑ, π)`
    #[serde(rename = "xz180")]
    Xz180,
    /// `R(x̂ + ŷ − ẑ, 4π/3)`
    #[serde(rename = "xyz240")]
    Xyz240,
}

impl CliffordGate {
    pub const ALL: [CliffordGate; 4] = [
        CliffordGate::X90,
        CliffordGate::Z90,
        CliffordGate::Xz180,
        CliffordGate::Xyz240,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CliffordGate::X90 => "x90",
            CliffordGate::Z90 => "z90",
            CliffordGate::Xz180 => "xz180",
            CliffordGate::Xyz240 => "xyz240",
        }
    }

    pub fn target(self) -> Rotation {
        match self {
            CliffordGate::X90 => Rotation::new([1.0, 0.0, 0.0], FRAC_PI_2),
            CliffordGate::Z90 => Rotation::new([0.0, 0.0, 1.0], FRAC_PI_2),
            CliffordGate::Xz180 => Rotation::new([1.0, 0.0, 1.0], PI),
            CliffordGate::Xyz240 => Rotation::new([1.0, 1.0, -1.0], 4.0 * PI / 3.0),
        }
    }

    /// Naive decomposition into in-plane rotations, in time order.
    fn naive_primitives(self) -> Vec<PulseSegment> {
        let s = PulseSegment::new;
        match self {
            // R(x, π/2)
            CliffordGate::X90 => vec![s(0.0, FRAC_PI_2)],
            // R(x, π/2) R(y, π/2) R(−x, π/2)
            CliffordGate::Z90 => vec![s(PI, FRAC_PI_2), s(FRAC_PI_2, FRAC_PI_2), s(0.0, FRAC_PI_2)],
            // R(−y, π/2) R(x, π)
            CliffordGate::Xz180 => vec![s(0.0, PI), s(3.0 * FRAC_PI_2, FRAC_PI_2)],
            // R(−x, π/2) R(−y, π/2)
            CliffordGate::Xyz240 => vec![s(3.0 * FRAC_PI_2, FRAC_PI_2), s(PI, FRAC_PI_2)],
        }
    }

    /// `(θ', φ', γ')` for the geometric realization.
    pub fn geometric_angles(self) -> (f64, f64, f64) {
        match self {
            CliffordGate::X90 => (FRAC_PI_2, 0.0, -FRAC_PI_4),
            CliffordGate::Z90 => (0.0, 0.0, -FRAC_PI_4),
            CliffordGate::Xz180 => (FRAC_PI_4, 0.0, -FRAC_PI_2),
            CliffordGate::Xyz240 => (PI - SQRT_2.atan(), FRAC_PI_4, -2.0 * PI / 3.0),
        }
    }

    /// `(χ0, φ0, φ1, β0)` for the non-cyclic realization.
    pub fn non_cyclic_angles(self) -> (f64, f64, f64, f64) {
        match self {
            CliffordGate::X90 => (PI / 8.0, FRAC_PI_2, PI, 5.0 * PI / 8.0),
            CliffordGate::Z90 => (PI, 0.0, FRAC_PI_4, PI),
            CliffordGate::Xz180 => (FRAC_PI_2, 0.0, -FRAC_PI_2, PI),
            CliffordGate::Xyz240 => (3.0 * FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2),
        }
    }

    pub fn sequence(self, family: GateFamily) -> PulseSequence {
        let target = self.target();
        let build = |segments| PulseSequence::new(family, target, segments).expect("catalog areas are nonnegative");
        match family {
            GateFamily::Naive => build(self.naive_primitives()),
            GateFamily::Corpse => build(
                self.naive_primitives()
                    .iter()
                    .flat_map(|p| corpse_segments(p.phi, p.theta))
                    .collect(),
            ),
            GateFamily::Geometric => {
                let (t, p, g) = self.geometric_angles();
                let mut seq = geometric_sequence(t, p, g).expect("catalog angles are valid");
                seq.target = target;
                seq
            }
            GateFamily::NonCyclic => {
                let (c, p0, p1, b) = self.non_cyclic_angles();
                let mut seq = non_cyclic_sequence(c, p0, p1, b).expect("catalog areas are positive");
                seq.target = target;
                seq
            }
        }
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CliffordGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CliffordGate::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGate(s.to_string()))
    }
}

/// One catalog entry: a gate in one family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub gate: CliffordGate,
    pub sequence: PulseSequence,
}

/// All sixteen gate/family combinations, gate-major.
pub fn clifford_catalog() -> Vec<CatalogEntry> {
    CliffordGate::ALL
        .into_iter()
        .flat_map(|gate| {
            GateFamily::ALL.into_iter().map(move |family| CatalogEntry {
                gate,
                sequence: gate.sequence(family),
            })
        })
        .collect()
}

/// Free areas of a non-cyclic x rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonCyclicAreas {
    pub chi0: f64,
    pub beta0: f64,
}

impl NonCyclicAreas {
    pub fn default_for(gamma: f64) -> Self {
        Self {
            chi0: 0.01 * gamma,
            beta0: 1.01 * gamma,
        }
    }
}

/// Leading-order quasi-static fidelity `|Tr(U_t† U_δ)|/2` of an x rotation by
/// `gamma`.
///
/// `areas` only matters for the non-cyclic family and defaults to
/// [`NonCyclicAreas::default_for`].
pub fn quasistatic_fidelity(
    family: GateFamily,
    gamma: f64,
    delta_over_omega0: f64,
    areas: Option<NonCyclicAreas>,
) -> Result<f64> {
    let d = delta_over_omega0;
    if !(d.abs() <= 0.3) {
        return Err(Error::InvalidParameter(format!(
            "quasi-static expansion needs |delta/omega0| <= 0.3, got {d}"
        )));
    }
    let d2 = d * d;
    let f = match family {
        GateFamily::Naive => 1.0 - d2 * (1.0 - gamma.cos()) / 4.0,
        GateFamily::NonCyclic => {
            let a = areas.unwrap_or(NonCyclicAreas::default_for(gamma));
            1.0 + d2 * (-3.0 + 2.0 * a.beta0.cos() - gamma.cos() + 2.0 * a.chi0.cos()) / 4.0
        }
        GateFamily::Geometric => 1.0 - 3.0 * d2 / 4.0 + d2 * (gamma / 2.0).cos() - d2 * gamma.cos() / 4.0,
        GateFamily::Corpse => {
            let g = gamma;
            let bracket = 7.0 + (g - TWO_PI).powi(2)
                - 6.0 * g.cos()
                - (2.0 * g).cos()
                - 2.0
                    * (g / 2.0).sin()
                    * ((4.0 * PI - 2.0 * g) * (g / 2.0).cos()
                        + SQRT_2 * (7.0 + g.cos()).sqrt() * (g - TWO_PI + g.sin()));
            1.0 - d2 * d2 / 32.0 * bracket
        }
    };
    Ok(f)
}

/// Quasi-static fidelity from a family name, for callers holding strings.
pub fn quasistatic_fidelity_named(
    family: &str,
    gamma: f64,
    delta_over_omega0: f64,
    areas: Option<NonCyclicAreas>,
) -> Result<f64> {
    quasistatic_fidelity(family.parse()?, gamma, delta_over_omega0, areas)
}

/// Sequence realizing `R(x̂, γ)` in `family`, as used by the quasi-static expansions.
pub fn x_rotation(family: GateFamily, gamma: f64) -> Result<PulseSequence> {
    match family {
        GateFamily::Naive => Ok(naive_x(gamma)),
        GateFamily::Corpse => corpse_sequence(0.0, gamma),
        GateFamily::Geometric => geometric_x(gamma),
        GateFamily::NonCyclic => non_cyclic_x(gamma),
    }
}
