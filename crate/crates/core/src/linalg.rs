//! Thin floating-point linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector matrix columns reordered to match.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Upper-triangular Cholesky factor `U` with `M = UᵀU`; `None` when `M` is
/// not positive definite.
pub fn chol_upper(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone()).map(|c| c.l().transpose())
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

pub fn smallest_singular(m: &DMatrix<f64>) -> f64 {
    m.singular_values().min()
}

pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(b)
}

/// Least-squares solution of `m x = b` via normal equations with SVD
/// fallback; returns the minimum-norm solution and the residual norm.
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = nalgebra::SVD::new(m.clone(), true, true);
    let tol = 1e-12 * svd.singular_values.max().max(1.0);
    let x = svd.solve(b, tol).expect("svd solve");
    let residual = (m * &x - b).norm();
    (x, residual)
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
