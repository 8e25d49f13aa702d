use nalgebra::{DMatrix, DVector};

/// Solves `A x = rhs` for a symmetric positive definite `n × n` matrix in
/// row-major order. Returns `None` when a pivot falls below `rel_tol` times
/// the largest diagonal entry.
pub(crate) fn cholesky_solve(a: &[f64], n: usize, rhs: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let chol = DMatrix::from_row_slice(n, n, a).cholesky()?;
    if chol.l_dirty().diagonal().iter().any(|d| d * d <= rel_tol * scale) {
        return None;
    }
    Some(chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
}
