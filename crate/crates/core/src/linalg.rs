//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Inverts a symmetric positive-definite matrix, reporting its spectrum
/// when it is numerically singular.
pub fn spd_inverse(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(h);
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > max.abs() * 1e-12) || !min.is_finite() {
        return Err(Error::Singular {
            min_eigen: min,
            max_eigen: max,
        });
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&inv_vals) * v.transpose())))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Least-squares coefficients of `y` on the columns of `x`.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = x.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-12 * (x.nrows().max(x.ncols()) as f64);
    svd.solve(y, tol)
        .map_err(|e| Error::Data(format!("least squares failed: {e}")))
}

/// Looks for a column that is (numerically) a linear combination of earlier
/// columns, optionally together with an implicit constant.
///
/// Returns the offending column, the earlier columns that enter its
/// representation, and whether the constant does.
pub fn find_collinear(x: &DMatrix<f64>, with_constant: bool) -> Option<(usize, Vec<usize>, bool)> {
    let n = x.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut basis_cols: Vec<usize> = Vec::new();
    if with_constant && n > 0 {
        basis.push(DVector::from_element(n, 1.0 / (n as f64).sqrt()));
    }
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm0 = col.norm();
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= 1e-9 * norm0.max(1e-300) || norm0 == 0.0 {
            let offset = usize::from(with_constant);
            let mut design = DMatrix::from_element(n, basis_cols.len() + offset, 1.0);
            for (k, &c) in basis_cols.iter().enumerate() {
                design.set_column(k + offset, &x.column(c));
            }
            return Some(match least_squares(&design, &col) {
                Ok(coef) => {
                    let partners = basis_cols
                        .iter()
                        .zip(coef.iter().skip(offset))
                        .filter(|(_, b)| b.abs() > 1e-8)
                        .map(|(c, _)| *c)
                        .collect();
                    (j, partners, with_constant && coef[0].abs() > 1e-8)
                }
                Err(_) => (j, basis_cols.clone(), with_constant),
            });
        }
        basis.push(v / norm);
        basis_cols.push(j);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_diagonal() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let inv = spd_inverse(&h).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((inv[(1, 1)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_spectrum() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        match spd_inverse(&h) {
            Err(Error::Singular { max_eigen, .. }) => assert!((max_eigen - 2.0).abs() < 1e-12),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn detects_linear_combination() {
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 0.0, 2.0, 0.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0, 0.0, 4.0],
        );
        let (col, with, constant) = find_collinear(&x, false).unwrap();
        assert_eq!(col, 2);
        assert_eq!(with, vec![0, 1]);
        assert!(!constant);
        assert!(find_collinear(&x.columns(0, 2).into_owned(), false).is_none());
    }

    #[test]
    fn constant_column_collides_with_implicit_constant() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 3.0, 2.0, 3.0, 4.0, 3.0]);
        let (col, with, constant) = find_collinear(&x, true).unwrap();
        assert_eq!(col, 1);
        assert!(with.is_empty());
        assert!(constant);
    }
}
