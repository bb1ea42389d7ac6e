//! Cluster-robust penalty loadings.

use nalgebra::DMatrix;

use crate::features::design::group_codes;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Loadings {
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

/// `ψ_j = sqrt((1/n) Σ_g (Σ_{i∈g} x_ij ε_i)²)` over the columns of `x`.
pub fn cluster_penalty_loadings(
    x: &DMatrix<f64>,
    cluster_id: &[String],
    residuals: &[f64],
) -> Result<Loadings> {
    let n = x.nrows();
    if cluster_id.len() != n || residuals.len() != n {
        return Err(Error::Contract("loadings inputs have mismatched lengths".into()));
    }
    let (codes, g) = group_codes(cluster_id);
    let p = x.ncols();
    let mut sums = DMatrix::<f64>::zeros(g, p);
    for j in 0..p {
        let col = x.column(j);
        for i in 0..n {
            sums[(codes[i], j)] += col[i] * residuals[i];
        }
    }
    let mut warnings = Vec::new();
    let values = (0..p)
        .map(|j| {
            if x.column(j).iter().all(|v| *v == 0.0) {
                warnings.push(format!("column {j} is all zero; loading 0"));
            }
            (sums.column(j).norm_squared() / n as f64).sqrt()
        })
        .collect();
    Ok(Loadings { values, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singletons(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn singleton_clusters_are_heteroskedastic() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, -1.0]);
        let e = [0.5, -1.0, 2.0];
        let l = cluster_penalty_loadings(&x, &singletons(3), &e).unwrap();
        let expect = ((0.25 + 4.0 + 4.0) / 3.0_f64).sqrt();
        assert!((l.values[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_homoskedastic_oracle() {
        // Orthonormal 3×2 columns, ε ≡ σ.
        let s = 1.0 / 2f64.sqrt();
        let x = DMatrix::from_row_slice(3, 2, &[s, 0.0, -s, 0.0, 0.0, 1.0]);
        let sigma = 0.7;
        let l = cluster_penalty_loadings(&x, &singletons(3), &[sigma; 3]).unwrap();
        for v in l.values {
            assert!((v - sigma / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn one_cluster_collapses() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let e = [1.0, -1.0, 0.5, 0.25];
        let l = cluster_penalty_loadings(&x, &vec!["a".to_string(); 4], &e).unwrap();
        let s: f64 = 1.0 - 2.0 + 1.5 + 1.0;
        assert!((l.values[0] - s.abs() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_column_warns() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let l = cluster_penalty_loadings(&x, &singletons(2), &[1.0, 1.0]).unwrap();
        assert_eq!(l.values[0], 0.0);
        assert_eq!(l.warnings.len(), 1);
    }
}
