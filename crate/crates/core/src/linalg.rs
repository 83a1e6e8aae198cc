//! Small dense helpers shared by the block-diagonal machinery.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized as `(M + M†)/2` first so that round-off
/// asymmetry never reaches the solver.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(DVector<f64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NumericalError(format!(
            "eigen-decomposition of non-square {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), CMatrix::zeros(0, 0)));
    }
    let h = (m + m.adjoint()) * re(0.5);
    let eig = SymmetricEigen::try_new(h, 1e-15, 10_000).ok_or_else(|| {
        Error::NumericalError(format!("Hermitian eigensolver did not converge ({n}x{n})"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> C64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let mut scaled = vectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= f(values[k]);
    }
    Ok(&scaled * vectors.adjoint())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `‖M − M†‖_max`
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Sum of singular values of a Hermitian matrix.
pub fn hermitian_trace_norm(m: &CMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigen(m)?;
    Ok(values.iter().map(|v| v.abs()).sum())
}
