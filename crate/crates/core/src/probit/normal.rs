//! Standard-normal functions with tail-stable logarithms.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// Lower bound applied to cell probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `ln Φ(x)`, accurate far into the lower tail.
pub fn ln_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return cdf(x).ln();
    }
    // Asymptotic series for the lower tail.
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - LN_SQRT_2PI - (-x).ln() + series.ln()
}

/// Inverse Mills ratio `φ(x)/Φ(x)`, stable for large negative `x`.
pub fn mills(x: f64) -> f64 {
    if x > -30.0 {
        return pdf(x) / cdf(x);
    }
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -x / series
}

/// `Φ(hi) − Φ(lo)` without cancellation in the upper tail.
pub fn interval(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        cdf(-lo) - cdf(-hi)
    } else {
        cdf(hi) - cdf(lo)
    }
}

/// Log-probability of the interval `(lo, hi]` and its partial derivatives
/// with respect to `lo` and `hi`.
///
/// Open ends use the one-sided tail formulas; interior cells whose mass
/// underflows [`PROB_FLOOR`] contribute the floor and a zero derivative.
pub fn ln_interval_grad(lo: f64, hi: f64) -> (f64, f64, f64) {
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => (0.0, 0.0, 0.0),
        (false, true) => (ln_cdf(hi), 0.0, mills(hi)),
        (true, false) => (ln_cdf(-lo), -mills(-lo), 0.0),
        (true, true) => {
            let p = interval(lo, hi);
            if p < PROB_FLOOR {
                (PROB_FLOOR.ln(), 0.0, 0.0)
            } else {
                (p.ln(), -pdf(lo) / p, pdf(hi) / p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_matches_reference_values() {
        // scipy.stats.norm.cdf
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((cdf(-8.0) - 6.220_960_574_271_74e-16).abs() < 1e-28);
    }

    #[test]
    fn quantile_matches_reference_values() {
        // scipy.stats.norm.ppf
        assert!((quantile(0.17) - -0.954_165_253_146_194_3).abs() < 1e-12);
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(quantile(0.5), 0.0);
    }

    #[test]
    fn ln_cdf_is_continuous_across_the_asymptotic_switch() {
        let a = ln_cdf(-30.0 + 1e-9);
        let b = ln_cdf(-30.0 - 1e-9);
        assert!((a - b).abs() < 1e-6);
        // scipy.stats.norm.logcdf(-40)
        assert!((ln_cdf(-40.0) - -804.608_442_013_753_9).abs() < 1e-8);
    }

    #[test]
    fn mills_ratio_is_continuous() {
        let a = mills(-30.0 + 1e-9);
        let b = mills(-30.0 - 1e-9);
        assert!((a - b).abs() / a < 1e-8);
    }

    #[test]
    fn upper_tail_interval_keeps_precision() {
        let p = interval(9.0, f64::INFINITY);
        assert!((p - 1.128_588_405_953_832_4e-19).abs() < 1e-30);
    }

    #[test]
    fn three_category_cells() {
        let p1 = interval(f64::NEG_INFINITY, -1.0);
        let p2 = interval(-1.0, 1.0);
        let p3 = interval(1.0, f64::INFINITY);
        assert!((p1 - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((p2 - 0.682_689_492_137_085_9).abs() < 1e-12);
        assert!((p3 - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((p1 + p2 + p3 - 1.0).abs() < 1e-14);
    }
}
