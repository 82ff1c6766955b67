//! Small dense helpers on top of nalgebra. Every factorization failure is
//! surfaced as an error; nothing falls back to a pseudo-inverse.

use nalgebra::DMatrix;

use crate::error::{IppError, Result};

/// Lower Cholesky factor, or an error naming `what` when the matrix is not
/// numerically positive definite.
pub(crate) fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(IppError::NumericalFailure(format!("{what}: non-finite entry")));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| IppError::NumericalFailure(format!("{what}: not positive definite")))?;
    let l = chol.unpack();
    if l.diagonal().iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(IppError::NumericalFailure(format!("{what}: singular factor")));
    }
    Ok(l)
}

pub(crate) fn logdet_from_lower(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Inverse of an SPD matrix through its lower factor.
pub(crate) fn inverse_from_lower(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("factor has a positive diagonal");
    let mut inv = linv.transpose() * linv;
    symmetrize(&mut inv);
    inv
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `sum_i v_i v_i^T` weighted by `c_i`, taking the rows of `rows` as the vectors.
pub(crate) fn weighted_gram(rows: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let m = rows.ncols();
    let mut scaled = rows.clone();
    for (i, w) in weights.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*w);
    }
    let mut g = rows.transpose() * scaled;
    debug_assert_eq!(g.nrows(), m);
    symmetrize(&mut g);
    g
}

#[cfg(test)]
pub(crate) fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
