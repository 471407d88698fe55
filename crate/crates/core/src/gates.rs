//! Two-qubit gate matrices.
//!
//! Basis order is `|ab⟩` with the first operand as the high bit, so a CNOT
//! controlled on the first operand is `diag(I, X)`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat4 = Matrix4<C64>;
pub type Mat2 = Matrix2<C64>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity() -> Mat4 {
    Mat4::identity()
}

pub fn cx() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = c(1.0);
    m[(1, 1)] = c(1.0);
    m[(2, 3)] = c(1.0);
    m[(3, 2)] = c(1.0);
    m
}

/// CNOT controlled on the second operand.
pub fn cx_reversed() -> Mat4 {
    let s = swap();
    s * cx() * s
}

pub fn cz() -> Mat4 {
    let mut m = Mat4::identity();
    m[(3, 3)] = c(-1.0);
    m
}

pub fn swap() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = c(1.0);
    m[(1, 2)] = c(1.0);
    m[(2, 1)] = c(1.0);
    m[(3, 3)] = c(1.0);
    m
}

pub fn iswap() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = c(1.0);
    m[(1, 2)] = C64::new(0.0, 1.0);
    m[(2, 1)] = C64::new(0.0, 1.0);
    m[(3, 3)] = c(1.0);
    m
}

/// Re-expresses `u` with its operands exchanged.
pub fn swap_operands(u: &Mat4) -> Mat4 {
    let s = swap();
    s * u * s
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

/// Frobenius norm of `U U† − I`.
pub fn unitarity_deviation(u: &Mat4) -> f64 {
    (u * u.adjoint() - Mat4::identity()).norm()
}

pub fn is_unitary(u: &Mat4, tol: f64) -> bool {
    unitarity_deviation(u) <= tol
}

/// Single-qubit unitary from ZYZ Euler angles and a global phase.
pub fn su2(theta: f64, phi: f64, lambda: f64, phase: f64) -> Mat2 {
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let g = C64::from_polar(1.0, phase);
    Mat2::new(
        g * c(ct),
        -g * C64::from_polar(st, lambda),
        g * C64::from_polar(st, phi),
        g * C64::from_polar(ct, phi + lambda),
    )
}

/// Row-major `[re, im]` entries.
pub fn to_entries(u: &Mat4) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            out.push([u[(i, j)].re, u[(i, j)].im]);
        }
    }
    out
}

pub fn from_entries(entries: &[[f64; 2]]) -> Option<Mat4> {
    if entries.len() != 16 {
        return None;
    }
    Some(Mat4::from_fn(|i, j| {
        let [re, im] = entries[4 * i + j];
        C64::new(re, im)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        for m in [identity(), cx(), cz(), swap(), iswap(), cx_reversed()] {
            assert!(is_unitary(&m, 1e-12));
        }
    }

    #[test]
    fn conjugating_cx_by_swap_reverses_control() {
        // CX with control on the second operand, written out by hand.
        let mut want = Mat4::zeros();
        want[(0, 0)] = c(1.0);
        want[(3, 1)] = c(1.0);
        want[(2, 2)] = c(1.0);
        want[(1, 3)] = c(1.0);
        assert!((swap_operands(&cx()) - want).norm() < 1e-15);
        assert!((swap_operands(&want) - cx()).norm() < 1e-15);
    }

    #[test]
    fn kron_matches_operand_order() {
        let x = Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0));
        let i = Mat2::identity();
        // X on the first operand flips the high bit.
        let m = kron(&x, &i);
        assert_eq!(m[(2, 0)], c(1.0));
        assert!(is_unitary(
            &kron(&su2(0.3, 1.1, -0.4, 0.2), &su2(1.0, 0.0, 2.0, 0.0)),
            1e-12
        ));
    }
}
