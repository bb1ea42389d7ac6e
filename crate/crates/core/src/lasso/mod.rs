//! Weighted LASSO with cluster-robust penalty loadings, the plug-in
//! penalty level, and post-double-selection over a penalized control block.

pub mod loadings;
pub mod pds;
pub mod solver;

pub use loadings::{cluster_penalty_loadings, Loadings};
pub use pds::{pds_select, PdsOptions, PdsSelection, RegressionAudit};
pub use solver::{solve_lasso, GramDesign, LassoFit, PenalizedProblem};

use crate::probit::normal;
use crate::{Error, Result};

/// `λ = 2 c √n Φ⁻¹(1 − γ / (2p))`.
pub fn plugin_lambda(n: usize, p_penalized: usize, c: f64, gamma: f64) -> Result<f64> {
    if n == 0 || p_penalized == 0 {
        return Err(Error::Config("plug-in lambda needs n, p >= 1".into()));
    }
    let tail = gamma / (2.0 * p_penalized as f64);
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::Config(format!(
            "gamma/(2p) must lie in (0, 1), got {tail}"
        )));
    }
    Ok(2.0 * c * (n as f64).sqrt() * normal::quantile(1.0 - tail))
}

/// Default `γ = 0.1 / ln n`.
pub fn default_gamma(n: usize) -> f64 {
    0.1 / (n as f64).ln()
}

/// Soft-threshold operator `sign(z)·max(|z| − t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_examples() {
        assert_eq!(plugin_lambda(50, 1, 1.1, 1.0).unwrap(), 0.0);
        // scipy: 2*1.1*sqrt(100)*norm.ppf(1 - (0.1/ln 100)/20)
        let l = plugin_lambda(100, 10, 1.1, default_gamma(100)).unwrap();
        assert!((l - 67.445_819_412_865_55).abs() < 1e-9);
        let l2 = plugin_lambda(100, 10, 2.2, default_gamma(100)).unwrap();
        assert!((l2 - 2.0 * l).abs() < 1e-12);
        assert!(plugin_lambda(10, 1, 1.1, 2.0).is_err());
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }
}
