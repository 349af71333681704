//! Reference operating points used by the examples, the CLI defaults and the
//! acceptance checks.

use crate::error::Result;
use crate::hamiltonian::{eigensystem, DeviceParams, EigenSystem};
use crate::noise::SpectralModel;
use crate::units::{ghz, mhz};

/// Strong-field device, `ΔB > τ` (GHz).
pub const STRONG_FIELD_GHZ: (f64, f64) = (2.5, 1.5);
/// Weak-field device, `ΔB < τ` (GHz).
pub const WEAK_FIELD_GHZ: (f64, f64) = (1.5, 1.75);
/// AC detuning amplitude (GHz).
pub const EPS_AC_GHZ: f64 = 0.1;

/// Dimensionless `A·t0` of the reference 1/f spectrum, with `t0 = 1/Ω0`.
pub const A_T0: f64 = 1e-3;
/// Noise cutoffs (GHz).
pub const OMEGA_IR_GHZ: f64 = 1e-4;
pub const OMEGA_UV_GHZ: f64 = 20.0;
/// Standard deviation of the qubit-frequency noise (μeV).
pub const SIGMA_MICRO_EV: f64 = 0.02;

/// Qubit-resonator coupling `g′` (MHz).
pub const G_PRIME_MHZ: f64 = 100.0;
/// Photon decay rate `Γ_a/2π` (MHz).
pub const GAMMA_A_MHZ: f64 = 0.028;

/// A device biased at its sweet spot together with its eigensystem.
#[derive(Clone, Debug)]
pub struct OperatingPoint {
    pub params: DeviceParams,
    pub eigen: EigenSystem,
    pub eps_ac: f64,
}

impl OperatingPoint {
    pub fn at_sweet_spot(delta_b_ghz: f64, tau_ghz: f64, eps_ac_ghz: f64) -> Result<Self> {
        let params = DeviceParams::at_sweet_spot(ghz(delta_b_ghz), ghz(tau_ghz))?;
        Ok(Self {
            params,
            eigen: eigensystem(&params),
            eps_ac: ghz(eps_ac_ghz),
        })
    }

    pub fn strong_field() -> Self {
        Self::at_sweet_spot(STRONG_FIELD_GHZ.0, STRONG_FIELD_GHZ.1, EPS_AC_GHZ)
            .expect("reference device has a sweet spot")
    }

    pub fn weak_field() -> Self {
        Self::at_sweet_spot(WEAK_FIELD_GHZ.0, WEAK_FIELD_GHZ.1, EPS_AC_GHZ).expect("reference device has a sweet spot")
    }

    /// `Ω0 = |d_ge| ε_AC`.
    pub fn rabi_frequency(&self) -> f64 {
        self.eigen.d_ge().abs() * self.eps_ac
    }
}

/// The reference 1/f spectrum for a qubit with Rabi frequency `omega0`.
pub fn reference_spectrum(omega0: f64) -> SpectralModel {
    let t0 = 1.0 / omega0;
    SpectralModel::new(A_T0 / t0, 1.0, t0, ghz(OMEGA_IR_GHZ), ghz(OMEGA_UV_GHZ)).expect("reference cutoffs are ordered")
}

pub fn g_prime() -> f64 {
    mhz(G_PRIME_MHZ)
}

pub fn gamma_a() -> f64 {
    mhz(GAMMA_A_MHZ)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rabi_frequency() {
        let op = OperatingPoint::strong_field();
        assert!((crate::units::to_ghz(op.rabi_frequency()) - 0.045055).abs() < 1e-5);
        let s = reference_spectrum(op.rabi_frequency());
        assert!((s.omega_ir / op.rabi_frequency() - 2.220e-3).abs() < 1e-5);
        assert!((s.omega_uv / op.rabi_frequency() - 443.9).abs() < 0.1);
    }
}
