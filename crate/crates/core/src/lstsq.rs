//! Minimal-norm linear least squares.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff for rank decisions.
pub const RANK_EPS: f64 = 1e-12;

/// Minimal-norm solution of `min |A x - b|` via the SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DVector::zeros(a.ncols());
    }
    svd.solve(b, RANK_EPS * smax)
        .expect("u and v were computed")
}

/// Fit `target ≈ Σ_k x_k basis[k]` over flattened component arrays.
pub fn fit_combination(basis: &[&[f64]], target: &[f64]) -> Vec<f64> {
    let rows = target.len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, c| basis[c][r]);
    lstsq(&a, &DVector::from_column_slice(target))
        .iter()
        .copied()
        .collect()
}
