//! Dense complex linear algebra helpers shared by the model builders.
//!
//! Density matrices are flattened by stacking columns, which is also the
//! native storage order of `nalgebra` matrices.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Column-stacked vectorisation of a square matrix.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, dim: usize) -> CMatrix {
    assert_eq!(v.len(), dim * dim, "vector length does not match dimension");
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Row vector `r` with `r · vec(X) = Tr(A X)` for every `X`.
pub fn trace_functional(a: &CMatrix) -> CVector {
    vectorize(&a.transpose())
}

pub fn dot_unconjugated(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows())
            .all(|i| (0..m.ncols()).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn any_nan(m: &CMatrix) -> bool {
    m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_functional_matches_trace_of_product() {
        let a = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 1.0, j as f64 - 0.5));
        let x = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * j) as f64, i as f64 - j as f64));
        let lhs = dot_unconjugated(&trace_functional(&a), &vectorize(&x));
        let rhs = trace(&(&a * &x));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn vectorize_roundtrip() {
        let x = CMatrix::from_fn(4, 4, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(unvectorize(&vectorize(&x), 4), x);
        // column stacking: element (1, 0) comes second
        assert_eq!(vectorize(&x)[1], x[(1, 0)]);
    }
}
