//! Small complex linear-algebra helpers shared by the simulation modules.

use nalgebra::{DMatrix, Matrix2, Matrix3};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat3 = Matrix3<C64>;
pub type DMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// `exp(-i (h·σ))` for a real vector `h`, in closed form.
pub fn su2_exp(h: [f64; 3]) -> Mat2 {
    let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if norm == 0.0 {
        return Mat2::identity();
    }
    let (s, co) = norm.sin_cos();
    let (nx, ny, nz) = (h[0] / norm, h[1] / norm, h[2] / norm);
    Mat2::new(c(co, -s * nz), c(-s * ny, -s * nx), c(s * ny, -s * nx), c(co, s * nz))
}

/// Rotation about the unit axis `n` by `angle`: `exp(-i angle/2 n·σ)`.
pub fn rotation(n: [f64; 3], angle: f64) -> Mat2 {
    let h = angle / 2.0;
    su2_exp([n[0] * h, n[1] * h, n[2] * h])
}

/// Kronecker product of two dynamically sized matrices.
pub fn kron(a: &DMat, b: &DMat) -> DMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `exp(-i H t)` for a Hermitian 3×3 `H`.
pub fn unitary_step3(h: &Mat3, t: f64) -> Mat3 {
    (h * c(0.0, -t)).exp()
}

/// `exp(-i H t)` for a Hermitian `H` of any size.
pub fn unitary_step(h: &DMat, t: f64) -> DMat {
    (h * c(0.0, -t)).exp()
}

/// Element-wise `Tr(A† B)`, valid for any two matrices of the same shape.
pub fn overlap<'a>(a: impl IntoIterator<Item = &'a C64>, b: impl IntoIterator<Item = &'a C64>) -> C64 {
    a.into_iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius distance between `a` and `b` after removing the best global phase.
pub fn phase_distance(a: &Mat2, b: &Mat2) -> f64 {
    let ov = overlap(a.iter(), b.iter());
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    (a * phase - b).norm()
}

/// Closest-to-identity-phase comparison for larger unitaries.
pub fn phase_distance_dyn(a: &DMat, b: &DMat) -> f64 {
    let ov = overlap(a.iter(), b.iter());
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    (a * phase - b).norm()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMat) -> f64 {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    herm.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn su2_exp_matches_pade() {
        let h = [0.3, -0.7, 1.1];
        let gen = sigma_x() * c(h[0], 0.0) + sigma_y() * c(h[1], 0.0) + sigma_z() * c(h[2], 0.0);
        let pade = (gen * c(0.0, -1.0)).exp();
        assert!((su2_exp(h) - pade).norm() < 1e-13);
    }

    #[test]
    fn pi_rotation_about_x_is_minus_i_sigma_x() {
        let r = rotation([1.0, 0.0, 0.0], PI);
        assert!((r - sigma_x() * c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let a = DMat::from_row_slice(2, 2, &[ONE, c(2.0, 0.0), ZERO, ONE]);
        let b = DMat::identity(3, 3);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(1, 4)], c(2.0, 0.0));
        assert_eq!(k[(4, 1)], ZERO);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let r = rotation([0.0, 1.0, 0.0], 0.4);
        let shifted = r * C64::from_polar(1.0, 1.3);
        assert!(phase_distance(&shifted, &r) < 1e-14);
    }
}
