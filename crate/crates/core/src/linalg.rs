//! Small dense helpers on top of nalgebra shared by the numerical modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Ascending eigenvalues of the symmetric part of `m`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    DVector::from_vec(values)
}

/// `(min, max)` eigenvalue of a symmetric matrix.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let values = symmetric_eigenvalues(m);
    (values[0], values[values.len() - 1])
}

/// Numerical rank with singular values below `rel_tol * s_max` treated as zero.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let s_max = sv.iter().copied().fold(0.0, f64::max);
    if s_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * s_max).count()
}

pub fn is_finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn is_finite_vector(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Cholesky factor of a symmetric positive definite matrix; reports the
/// smallest eigenvalue when the factorization does not exist.
pub fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let sym = (m + m.transpose()) * 0.5;
    let (min_eigenvalue, _) = eigen_range(&sym);
    if min_eigenvalue <= 0.0 {
        return Err(Error::MetricIndefinite { min_eigenvalue });
    }
    Cholesky::new(sym).ok_or(Error::MetricIndefinite { min_eigenvalue })
}

/// Largest eigenvalue of the symmetric pencil `(a, b)` given the Cholesky
/// factor `b = L Lᵀ`, via `L⁻¹ a L⁻ᵀ`.
pub fn max_generalized_eigenvalue(a: &DMatrix<f64>, b_chol: &Cholesky<f64, Dyn>) -> Result<f64> {
    let l = b_chol.l_dirty();
    let half = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::NumericalFailure("triangular solve on metric factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::NumericalFailure("triangular solve on metric factor".into()))?;
    if !is_finite_matrix(&reduced) {
        let diag = l.diagonal();
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(0.0, f64::max);
        return Err(Error::NumericalFailure(format!(
            "non-finite reduced pencil (metric factor diagonal spans {lo:e}..{hi:e})"
        )));
    }
    Ok(eigen_range(&reduced).1)
}

/// Assembles `[[a, b], [c, d]]`.
pub fn block2x2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (n, p) = (a.nrows(), d.nrows());
    let mut out = DMatrix::zeros(n + p, n + p);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, p)).copy_from(b);
    out.view_mut((n, 0), (p, n)).copy_from(c);
    out.view_mut((n, n), (p, p)).copy_from(d);
    out
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Format(format!(
            "{name}: row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_eigenvalue_of_scaled_identity() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let a = &b * 3.0;
        let chol = cholesky(&b).unwrap();
        let mu = max_generalized_eigenvalue(&a, &chol).unwrap();
        assert!((mu - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rank_of_duplicate_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert_eq!(numerical_rank(&m, 1e-10), 1);
    }

    #[test]
    fn indefinite_matrix_has_no_factor() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky(&m) {
            Err(Error::MetricIndefinite { min_eigenvalue }) => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
