//! Cluster-robust sandwich covariance and information criteria.

use nalgebra::DMatrix;

use crate::linalg::spd_inverse;
use crate::{Error, Result};

/// `V = H⁻¹ (Σ_g s_g s_gᵀ) H⁻¹ · G/(G−1)`.
///
/// `information` is the observed information (negative Hessian of the
/// log-likelihood) at the estimate, `scores` holds one row of score
/// contributions per unit, and `clusters` maps units to cluster codes.
pub fn cluster_sandwich_vcov(
    information: &DMatrix<f64>,
    scores: &DMatrix<f64>,
    clusters: &[usize],
) -> Result<DMatrix<f64>> {
    let k = information.ncols();
    if scores.ncols() != k || scores.nrows() != clusters.len() {
        return Err(Error::Contract("score matrix does not match information".into()));
    }
    let bread = spd_inverse(information)?;
    let g = clusters.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = DMatrix::<f64>::zeros(g, k);
    for (i, &c) in clusters.iter().enumerate() {
        let mut row = sums.row_mut(c);
        row += scores.row(i);
    }
    let used = (0..g).filter(|&c| clusters.contains(&c)).count().max(1);
    let meat = sums.transpose() * &sums;
    let factor = if used > 1 {
        used as f64 / (used as f64 - 1.0)
    } else {
        1.0
    };
    let v = &bread * meat * &bread * factor;
    Ok((&v + v.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoCriteria {
    pub aic: f64,
    pub bic: f64,
}

pub fn info_criteria(loglik: f64, k: usize, n: usize) -> InfoCriteria {
    let k = k as f64;
    InfoCriteria {
        aic: 2.0 * k - 2.0 * loglik,
        bic: k * (n as f64).ln() - 2.0 * loglik,
    }
}
