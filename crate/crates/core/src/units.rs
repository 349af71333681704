//! Unit conventions.
//!
//! Every frequency and energy inside the crate is an angular frequency in
//! rad/ns, and every time is in ns. Helpers here convert from the units people
//! usually quote.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// 1 μeV divided by ħ, in rad/ns.
pub const MICRO_EV: f64 = 1.519_267_447;

/// Converts an ordinary frequency in GHz to rad/ns.
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an ordinary frequency in MHz to rad/ns.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e-3
}

/// Converts rad/ns back to GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Converts an energy in μeV to rad/ns.
pub fn micro_ev(e: f64) -> f64 {
    e * MICRO_EV
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert!((to_ghz(ghz(2.5)) - 2.5).abs() < 1e-15);
        assert!((mhz(1000.0) - ghz(1.0)).abs() < 1e-12);
    }

    #[test]
    fn micro_ev_value() {
        // 1e-6 eV / (6.582119569e-16 eV s) = 1.519267e9 rad/s
        let expected = 1e-6 / 6.582_119_569e-16 * 1e-9;
        assert!((micro_ev(1.0) - expected).abs() < 1e-8);
    }
}
