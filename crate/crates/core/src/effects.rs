//! Post-estimation: predicted rating distributions, the delay rating-shift
//! simulation, the delay-duration curve and the naive-versus-controlled
//! bias comparison.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::data::JoinedRecord;
use crate::estimate::{select_and_fit, EstimationOptions};
use crate::features::{DesignMatrix, FeatureSpec, FeatureTable};
use crate::probit::{category_probs, OrderedFit};
use crate::{Error, Result};

/// Per-row category distributions with named columns overridden.
pub fn predict_probs(fit: &OrderedFit, rows: &DesignMatrix, overrides: &[(&str, f64)]) -> Result<Vec<Vec<f64>>> {
    for (name, _) in overrides {
        if !fit.names.iter().any(|n| n == name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let cols: Vec<Vec<f64>> = fit
        .names
        .iter()
        .map(|n| match overrides.iter().find(|(o, _)| o == n) {
            Some(&(_, v)) => Ok(vec![v; rows.nrows()]),
            None => rows.values(n),
        })
        .collect::<Result<_>>()?;
    Ok((0..rows.nrows())
        .into_par_iter()
        .map(|i| {
            let xb: f64 = cols.iter().zip(&fit.beta).map(|(c, b)| c[i] * b).sum();
            category_probs(&fit.cutpoints, xb)
        })
        .collect())
}

/// A copy of `fit` with one coefficient replaced.
pub fn with_coefficient(fit: &OrderedFit, name: &str, value: f64) -> Result<OrderedFit> {
    let j = fit
        .names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    let mut out = fit.clone();
    out.beta[j] = value;
    Ok(out)
}

fn expected(dist: &[f64], values: &[f64]) -> f64 {
    dist.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// `P(R₁ ≤ R₀ − 1)` for independent draws `R₁ ~ with`, `R₀ ~ without`.
fn prob_drop(with: &[f64], without: &[f64]) -> f64 {
    let mut cdf_with = 0.0;
    let mut total = 0.0;
    for j in 1..without.len() {
        cdf_with += with[j - 1];
        total += without[j] * cdf_with;
    }
    total
}

/// Delay-shift simulation: every row evaluated with the delay column at 1
/// and at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftReport {
    pub delay_column: String,
    pub categories: Vec<i64>,
    pub with_delay: Vec<Vec<f64>>,
    pub without_delay: Vec<Vec<f64>>,
    /// `E[rating | delay] − E[rating | no delay]` per row.
    pub expected_change: Vec<f64>,
    /// Probability of a rating at least one point lower, per row.
    pub prob_drop_ge1: Vec<f64>,
    /// Metric A (headline): share of rows whose expected rating falls by ≥ 1.
    pub share_drop_ge1_expected: f64,
    /// Metric B: share of rows with `P(drop ≥ 1) > 0.5`.
    pub share_drop_ge1_prob: f64,
    pub mean_rating_with: f64,
    pub mean_rating_without: f64,
    /// `100 · (mean_with − mean_without) / mean_without`.
    pub mean_pct_change: f64,
}

impl ShiftReport {
    /// Per-row CSV: `row,expected_change,prob_drop_ge1,p_with_<c>...,p_without_<c>...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["row".to_string(), "expected_change".into(), "prob_drop_ge1".into()];
        header.extend(self.categories.iter().map(|c| format!("p_with_{c}")));
        header.extend(self.categories.iter().map(|c| format!("p_without_{c}")));
        w.write_record(&header)?;
        for i in 0..self.expected_change.len() {
            let mut rec = vec![i.to_string(), self.expected_change[i].to_string(), self.prob_drop_ge1[i].to_string()];
            rec.extend(self.with_delay[i].iter().map(|p| p.to_string()));
            rec.extend(self.without_delay[i].iter().map(|p| p.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "delay_column: {}", self.delay_column);
        let _ = writeln!(s, "mean_rating_without: {:.6}", self.mean_rating_without);
        let _ = writeln!(s, "mean_rating_with: {:.6}", self.mean_rating_with);
        let _ = writeln!(s, "mean_pct_change: {:.6}", self.mean_pct_change);
        let _ = writeln!(s, "share_drop_ge1_expected: {:.6}", self.share_drop_ge1_expected);
        let _ = writeln!(s, "share_drop_ge1_prob: {:.6}", self.share_drop_ge1_prob);
        s
    }
}

pub fn simulate_delay_shift(fit: &OrderedFit, rows: &DesignMatrix, delay_column: &str) -> Result<ShiftReport> {
    let with_delay = predict_probs(fit, rows, &[(delay_column, 1.0)])?;
    let without_delay = predict_probs(fit, rows, &[(delay_column, 0.0)])?;
    let values: Vec<f64> = fit.categories.iter().map(|&c| c as f64).collect();
    let n = rows.nrows();
    let ew: Vec<f64> = with_delay.iter().map(|d| expected(d, &values)).collect();
    let eo: Vec<f64> = without_delay.iter().map(|d| expected(d, &values)).collect();
    let expected_change: Vec<f64> = ew.iter().zip(&eo).map(|(a, b)| a - b).collect();
    let prob_drop_ge1: Vec<f64> = with_delay.iter().zip(&without_delay).map(|(w, o)| prob_drop(w, o)).collect();
    let nf = n as f64;
    let mean_with = ew.iter().sum::<f64>() / nf;
    let mean_without = eo.iter().sum::<f64>() / nf;
    Ok(ShiftReport {
        delay_column: delay_column.to_string(),
        categories: fit.categories.clone(),
        share_drop_ge1_expected: expected_change.iter().filter(|d| **d <= -1.0).count() as f64 / nf,
        share_drop_ge1_prob: prob_drop_ge1.iter().filter(|p| **p > 0.5).count() as f64 / nf,
        with_delay,
        without_delay,
        expected_change,
        prob_drop_ge1,
        mean_rating_with: mean_with,
        mean_rating_without: mean_without,
        mean_pct_change: 100.0 * (mean_with - mean_without) / mean_without,
    })
}

/// One segment's quadratic delay-duration effect `f(t) = b₁t + b₂t²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSegment {
    pub name: String,
    pub b1: f64,
    pub b2: f64,
    pub values: Vec<f64>,
    /// `−b₁ / (2b₂)`; absent when `b₂ = 0`.
    pub vertex: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoints {
    /// Delay durations in hours.
    pub grid: Vec<f64>,
    pub segments: Vec<CurveSegment>,
}

impl CurvePoints {
    /// `t,<segment>...` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend(self.segments.iter().map(|s| s.name.clone()));
        w.write_record(&header)?;
        for (i, t) in self.grid.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(self.segments.iter().map(|s| s.values[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default grid: 0 to 3 hours in 0.05 steps.
pub fn default_grid() -> Vec<f64> {
    (0..=60).map(|i| i as f64 * 0.05).collect()
}

pub fn duration_curve(segments: &[(&str, f64, f64)], grid: &[f64]) -> Result<CurvePoints> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Contract("duration grid must be finite and non-negative".into()));
    }
    let segments = segments
        .iter()
        .map(|&(name, b1, b2)| CurveSegment {
            name: name.to_string(),
            b1,
            b2,
            values: grid.iter().map(|t| b1 * t + b2 * t * t).collect(),
            vertex: (b2 != 0.0).then(|| -b1 / (2.0 * b2)),
        })
        .collect();
    Ok(CurvePoints { grid: grid.to_vec(), segments })
}

/// Published leisure/business duration coefficients.
pub const TABLE4_DURATION: [(&str, f64, f64); 2] = [("leisure", -0.1086, 0.0312), ("business", -0.1687, 0.0516)];

/// Leisure and business curves from a fit with the duration-by-purpose
/// encoding.
pub fn curve_from_fit(fit: &OrderedFit, grid: &[f64]) -> Result<CurvePoints> {
    let get = |n: &str| fit.coef(n).map(|c| c.0).ok_or_else(|| Error::MissingColumn(n.to_string()));
    let seg = |purpose: &str| -> Result<(f64, f64)> {
        Ok((get(&format!("DELDUR × {purpose}"))?, get(&format!("DELDUR2 × {purpose}"))?))
    };
    let (l1, l2) = seg("LSRFLIER")?;
    let (b1, b2) = seg("BSNFLIER")?;
    duration_curve(&[("leisure", l1, l2), ("business", b1, b2)], grid)
}

/// Naive-versus-controlled comparison of one delay coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub column: String,
    pub rho_naive: f64,
    pub se_naive: f64,
    pub rho_controlled: f64,
    pub se_controlled: f64,
    /// `100 · (|ρ̂_naive| − |ρ̂_controlled|) / |ρ̂_naive|`.
    pub pct_drop: f64,
    pub rho_true: Option<f64>,
    pub dist_naive: Option<f64>,
    pub dist_controlled: Option<f64>,
    /// Set when either fit did not converge.
    pub flagged: bool,
}

impl BiasReport {
    pub fn controlled_closer(&self) -> Option<bool> {
        Some(self.dist_controlled? < self.dist_naive?)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "column: {}", self.column);
        let _ = writeln!(s, "rho_naive: {:.6} ({:.6})", self.rho_naive, self.se_naive);
        let _ = writeln!(s, "rho_controlled: {:.6} ({:.6})", self.rho_controlled, self.se_controlled);
        let _ = writeln!(s, "pct_drop: {:.4}", self.pct_drop);
        if let Some(t) = self.rho_true {
            let _ = writeln!(s, "rho_true: {t}");
            let _ = writeln!(s, "controlled_closer: {}", self.controlled_closer().unwrap_or(false));
        }
        if self.flagged {
            let _ = writeln!(s, "warning: a fit did not converge");
        }
        s
    }
}

/// Compares two fits on the same rows.
pub fn bias_report(naive: &OrderedFit, controlled: &OrderedFit, column: &str, rho_true: Option<f64>) -> Result<BiasReport> {
    if naive.n != controlled.n {
        return Err(Error::Contract(format!(
            "fits use different samples ({} vs {} rows)",
            naive.n, controlled.n
        )));
    }
    let missing = || Error::MissingColumn(column.to_string());
    let (bn, sn) = naive.coef(column).ok_or_else(missing)?;
    let (bc, sc) = controlled.coef(column).ok_or_else(missing)?;
    Ok(BiasReport {
        column: column.to_string(),
        rho_naive: bn,
        se_naive: sn,
        rho_controlled: bc,
        se_controlled: sc,
        pct_drop: 100.0 * (bn.abs() - bc.abs()) / bn.abs(),
        rho_true,
        dist_naive: rho_true.map(|t| (bn - t).abs()),
        dist_controlled: rho_true.map(|t| (bc - t).abs()),
        flagged: !(naive.converged && controlled.converged),
    })
}

/// Builds both specifications on the same records, runs selection and
/// estimation, and compares the delay coefficient.
pub fn compare_bias(
    records: &[JoinedRecord],
    naive: &FeatureSpec,
    controlled: &FeatureSpec,
    options: &EstimationOptions,
    column: &str,
    rho_true: Option<f64>,
) -> Result<BiasReport> {
    let fit = |spec: &FeatureSpec| -> Result<OrderedFit> {
        let m = FeatureTable::build(records, spec)?.design()?;
        Ok(select_and_fit(&m, options)?.fit)
    };
    bias_report(&fit(naive)?, &fit(controlled)?, column, rho_true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn fit(beta: Vec<f64>, cutpoints: Vec<f64>) -> OrderedFit {
        let k = beta.len();
        let names = (0..k).map(|j| if j == 0 { "DEL".to_string() } else { format!("X{j}") }).collect();
        OrderedFit {
            names,
            beta,
            categories: (1..=cutpoints.len() as i64 + 1).collect(),
            cutpoints,
            loglik: 0.0,
            vcov: DMatrix::identity(k, k),
            converged: true,
            n: 3,
            k,
            aic: 0.0,
            bic: 0.0,
            iterations: 0,
            grad_max_norm: 0.0,
            n_clusters: 1,
            warnings: Vec::new(),
            trace: Vec::new(),
        }
    }

    fn rows(xs: &[[f64; 2]]) -> DesignMatrix {
        let n = xs.len();
        DesignMatrix::new(
            vec![1; n],
            DMatrix::from_fn(n, 2, |i, j| xs[i][j]),
            vec!["DEL".into(), "X1".into()],
            vec![false, false],
            vec!["g".into(); n],
        )
        .unwrap()
    }

    #[test]
    fn zero_beta_gives_cutpoint_shares() {
        let f = fit(vec![0.0, 0.0], vec![-1.0, 0.0, 1.0]);
        let p = predict_probs(&f, &rows(&[[1.0, 2.0], [0.0, -3.0]]), &[]).unwrap();
        let expect = [0.158_655_253_931_457_05, 0.341_344_746_068_542_95, 0.341_344_746_068_542_95, 0.158_655_253_931_457_05];
        for d in &p {
            for (a, b) in d.iter().zip(expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(predict_probs(&f, &rows(&[[0.0, 0.0]]), &[("Z", 1.0)]).is_err());
    }

    #[test]
    fn zero_delay_coefficient_gives_no_shift() {
        let f = fit(vec![0.0, 0.4], vec![-1.0, 0.0, 1.0]);
        let r = simulate_delay_shift(&f, &rows(&[[1.0, 0.5], [0.0, -1.0]]), "DEL").unwrap();
        assert_eq!(r.mean_pct_change, 0.0);
        assert_eq!(r.share_drop_ge1_expected, 0.0);
        assert_eq!(r.share_drop_ge1_prob, 0.0);
    }

    #[test]
    fn negative_delay_lowers_rating_and_sign_flip_mirrors() {
        let m = rows(&[[1.0, 0.5], [0.0, -1.0], [0.0, 2.0]]);
        let down = simulate_delay_shift(&fit(vec![-2.5, 0.4], vec![-1.0, 0.0, 1.0]), &m, "DEL").unwrap();
        assert!(down.mean_rating_with < down.mean_rating_without);
        assert!(down.share_drop_ge1_expected > 0.0);
        let up = simulate_delay_shift(&fit(vec![2.5, 0.4], vec![-1.0, 0.0, 1.0]), &m, "DEL").unwrap();
        assert!(up.mean_rating_with > up.mean_rating_without);
        assert_eq!(up.share_drop_ge1_expected, 0.0);
    }

    #[test]
    fn prob_drop_oracle() {
        // with = point mass on 1, without = point mass on 3: certain drop.
        assert_eq!(prob_drop(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]), 1.0);
        // Uniform on {1,2} both: P(R1 <= R0 - 1) = P(R0=2, R1=1) = 1/4.
        assert!((prob_drop(&[0.5, 0.5], &[0.5, 0.5]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn published_vertices() {
        let c = duration_curve(&TABLE4_DURATION, &default_grid()).unwrap();
        assert!((c.segments[0].vertex.unwrap() - 1.7404).abs() < 1e-3);
        assert!((c.segments[1].vertex.unwrap() - 1.6347).abs() < 1e-3);
        assert_eq!(c.grid.len(), 61);
        // Business lies below leisure until the curves cross at ~2.95 h.
        for i in (1..c.grid.len()).filter(|&i| c.grid[i] < 2.9) {
            assert!(c.segments[1].values[i] < c.segments[0].values[i]);
        }
        let flat = duration_curve(&[("x", 0.0, 0.2), ("y", 0.3, 0.0)], &[0.0, 1.0]).unwrap();
        assert_eq!(flat.segments[0].vertex, Some(0.0));
        assert!(flat.segments[0].values.iter().all(|v| *v >= 0.0));
        assert_eq!(flat.segments[1].vertex, None);
    }

    #[test]
    fn bias_report_arithmetic() {
        let a = fit(vec![-0.4, 0.1], vec![0.0]);
        let b = fit(vec![-0.3, 0.1], vec![0.0]);
        let r = bias_report(&a, &b, "DEL", Some(-0.3)).unwrap();
        assert!((r.pct_drop - 25.0).abs() < 1e-12);
        assert_eq!(r.controlled_closer(), Some(true));
        assert!(!r.flagged);
    }

    proptest! {
        #[test]
        fn distributions_sum_to_one_and_dominate(
            xb in -4.0f64..4.0, shift in 0.0f64..2.0,
            cuts in proptest::collection::vec(0.05f64..1.0, 1..9), start in -3.0f64..0.0,
        ) {
            let mut kappa = vec![start];
            for d in cuts { let last = *kappa.last().unwrap(); kappa.push(last + d); }
            let lo = category_probs(&kappa, xb);
            let hi = category_probs(&kappa, xb + shift);
            prop_assert!((lo.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!((hi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let (mut cl, mut ch) = (0.0, 0.0);
            for j in 0..lo.len() {
                cl += lo[j]; ch += hi[j];
                prop_assert!(ch <= cl + 1e-12);
            }
        }

        #[test]
        fn vertex_is_scale_invariant(b1 in -1.0f64..-0.01, b2 in 0.01f64..1.0, s in 0.1f64..10.0) {
            let a = duration_curve(&[("a", b1, b2)], &[1.0]).unwrap();
            let b = duration_curve(&[("a", s * b1, s * b2)], &[1.0]).unwrap();
            let (va, vb) = (a.segments[0].vertex.unwrap(), b.segments[0].vertex.unwrap());
            prop_assert!(va > 0.0);
            prop_assert!((va - vb).abs() < 1e-12 * va.max(1.0));
        }
    }
}
