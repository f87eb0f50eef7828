//! Complex matrix aliases and the handful of helpers the estimators share.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Squared Frobenius norm.
pub fn fro2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm2(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Right inverse of a full-row-rank `rows <= cols` matrix.
///
/// Square matrices go through LU; wide ones use `Aᴴ (A Aᴴ)⁻¹`.
pub fn right_inverse(a: &CMat) -> Option<CMat> {
    if a.nrows() > a.ncols() {
        return None;
    }
    if a.is_square() {
        return a.clone().lu().try_inverse();
    }
    let ah = a.adjoint();
    let gram = a * &ah;
    let gram_inv = gram.cholesky()?.inverse();
    Some(ah * gram_inv)
}
