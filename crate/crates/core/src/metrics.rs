//! Gate-fidelity measures.
//!
//! Two measures appear throughout the crate. The trace overlap
//! `|Tr(U_t† U)| / d` is what the quasi-static expansions and the
//! filter-function fidelity approximate. The average gate fidelity
//! `(Tr(M M†) + |Tr M|²) / (d (d + 1))` with `M = U_t† U` is the
//! Haar-averaged state fidelity, and it also accounts for leakage when `U` is
//! the qubit block of a larger propagator.

use crate::linalg::{overlap, C64};
use nalgebra::{Dim, Matrix, Storage};

/// `|Tr(target† actual)| / d`.
pub fn trace_fidelity<R, S1, S2>(target: &Matrix<C64, R, R, S1>, actual: &Matrix<C64, R, R, S2>) -> f64
where
    R: Dim,
    S1: Storage<C64, R, R>,
    S2: Storage<C64, R, R>,
{
    let d = target.nrows() as f64;
    overlap(target.iter(), actual.iter()).norm() / d
}

/// Average gate fidelity of `actual` (possibly non-unitary) against a unitary
/// `target`.
pub fn average_gate_fidelity<R, S1, S2>(target: &Matrix<C64, R, R, S1>, actual: &Matrix<C64, R, R, S2>) -> f64
where
    R: Dim,
    S1: Storage<C64, R, R>,
    S2: Storage<C64, R, R>,
{
    let d = target.nrows() as f64;
    let tr = overlap(target.iter(), actual.iter()).norm_sqr();
    let norm = actual.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (norm + tr) / (d * (d + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, rotation, Mat2};

    #[test]
    fn identical_unitaries_score_one() {
        let u = rotation([0.6, 0.0, 0.8], 1.2);
        assert!((trace_fidelity(&u, &u) - 1.0).abs() < 1e-14);
        assert!((average_gate_fidelity(&u, &u) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_unitaries() {
        let x = rotation([1.0, 0.0, 0.0], std::f64::consts::PI);
        let id = Mat2::identity();
        assert!(trace_fidelity(&id, &x) < 1e-15);
        assert!((average_gate_fidelity(&id, &x) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn leakage_lowers_average_fidelity() {
        let u = Mat2::identity() * c(0.9_f64.sqrt(), 0.0);
        assert!((average_gate_fidelity(&Mat2::identity(), &u) - (1.8 + 3.6) / 6.0).abs() < 1e-14);
    }
}
