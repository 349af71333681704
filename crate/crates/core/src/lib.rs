//! Gate design and noise analysis for singlet-triplet double-quantum-dot
//! qubits driven at the transverse sweet spot.
//!
//! All frequencies and energies are angular frequencies in rad/ns and all
//! times are in ns; see [`units`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod presets;
pub mod pulses;
pub mod units;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/sweet-spot.md")]
    struct SweetSpot;
    #[doc = include_str!("../../../book/src/gate-families.md")]
    struct GateFamilies;
    #[doc = include_str!("../../../book/src/filter-functions.md")]
    struct FilterFunctions;
    #[doc = include_str!("../../../book/src/noise.md")]
    struct Noise;
    #[doc = include_str!("../../../book/src/dynamics.md")]
    struct Dynamics;
    #[doc = include_str!("../../../book/src/entangler.md")]
    struct Entangler;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
