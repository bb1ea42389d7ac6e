//! Maximum-likelihood probit family: ordered probit for ordinal ratings,
//! binary probit, and a random-intercept probit integrated by Gauss–Hermite
//! quadrature. All fits carry cluster-robust sandwich covariances and
//! information criteria.

pub mod binary;
pub mod normal;
pub mod optim;
pub mod ordered;
pub mod quadrature;
pub mod random_intercept;
pub mod report;
pub mod sandwich;

pub use binary::{fit_binary_probit, BinaryFit, BinaryOptions};
pub use optim::OptimOptions;
pub use ordered::{category_probs, fit_ordered_probit, ordered_loglik_grad, OrderedFit, OrderedOptions};
pub use random_intercept::{fit_random_intercept_probit, RandomInterceptOptions};
pub use sandwich::{cluster_sandwich_vcov, info_criteria, InfoCriteria};

use nalgebra::DMatrix;

use crate::linalg::find_collinear;
use crate::{Error, Result};

/// Rejects constant and linearly dependent columns. Both the ordered model
/// (through its cutpoints) and the binary models (through the intercept)
/// carry an implicit constant.
pub(crate) fn check_identification(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    for j in 0..x.ncols() {
        let col = x.column(j);
        let first = col[0];
        if col.iter().all(|v| *v == first) {
            return Err(Error::Identification(format!(
                "column `{}` is constant",
                names[j]
            )));
        }
    }
    if let Some((j, with, constant)) = find_collinear(x, true) {
        let mut partners: Vec<String> = with.iter().map(|&k| names[k].clone()).collect();
        if constant {
            partners.push("constant".into());
        }
        return Err(Error::Collinear {
            column: names[j].clone(),
            with: partners.join(", "),
        });
    }
    Ok(())
}

/// p-value stars: `***` < 0.01, `**` < 0.05, `*` < 0.10.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Two-sided normal p-value.
pub fn p_value(z: f64) -> f64 {
    2.0 * normal::cdf(-z.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.04), "**");
        assert_eq!(stars(0.009), "***");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.2), "");
    }

    #[test]
    fn p_value_of_196() {
        assert!((p_value(1.959_963_984_540_054) - 0.05).abs() < 1e-12);
    }
}
