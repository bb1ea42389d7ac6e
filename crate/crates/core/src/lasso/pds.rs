//! Post-double-selection: LASSO of the outcome on the controls plus one
//! LASSO of each focal regressor on the controls; the union of the active
//! sets is the retained control set.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::loadings::cluster_penalty_loadings;
use super::solver::{GramDesign, LassoFit};
use super::{default_gamma, plugin_lambda};
use crate::linalg::least_squares;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PdsOptions {
    pub c: f64,
    /// Defaults to `0.1 / ln n`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for PdsOptions {
    fn default() -> Self {
        Self {
            c: 1.1,
            gamma: None,
            tolerance: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionAudit {
    /// `y` for the outcome regression, otherwise the focal column name.
    pub target: String,
    pub loadings: Vec<f64>,
    pub active: Vec<String>,
    pub converged: bool,
    pub kkt_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdsSelection {
    pub lambda: f64,
    pub control_names: Vec<String>,
    /// Outcome regression first, then focal regressions sorted by name.
    pub regressions: Vec<RegressionAudit>,
    /// Selected controls in control-column order.
    pub union: Vec<String>,
    pub warnings: Vec<String>,
}

impl PdsSelection {
    /// Structured audit text: lambda, per-regression loadings and active sets, union.
    pub fn audit_report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("lambda: {}\n", self.lambda));
        out.push_str(&format!("controls: {}\n", self.control_names.join(", ")));
        for r in &self.regressions {
            out.push_str(&format!("[regression {}]\n", r.target));
            out.push_str(&format!("converged: {}\n", r.converged));
            out.push_str(&format!("kkt_violation: {:e}\n", r.kkt_violation));
            for (n, l) in self.control_names.iter().zip(&r.loadings) {
                out.push_str(&format!("loading {n}: {l}\n"));
            }
            out.push_str(&format!("active: {}\n", r.active.join(", ")));
        }
        out.push_str(&format!("union: {}\n", self.union.join(", ")));
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// Selects controls by post-double-selection.
pub fn pds_select(
    y: &[f64],
    focal: &[(String, Vec<f64>)],
    controls: &DMatrix<f64>,
    control_names: &[String],
    cluster_id: &[String],
    options: &PdsOptions,
) -> Result<PdsSelection> {
    let n = y.len();
    if controls.nrows() != n || cluster_id.len() != n || focal.iter().any(|(_, v)| v.len() != n) {
        return Err(Error::Contract("pds inputs have mismatched lengths".into()));
    }
    if control_names.len() != controls.ncols() {
        return Err(Error::Contract("control names do not match control columns".into()));
    }
    if let Some((f, _)) = focal.iter().find(|(f, _)| control_names.contains(f)) {
        return Err(Error::Contract(format!("focal column `{f}` is also a control")));
    }
    let p = controls.ncols();
    if p == 0 {
        return Ok(PdsSelection {
            lambda: 0.0,
            control_names: Vec::new(),
            regressions: Vec::new(),
            union: Vec::new(),
            warnings: Vec::new(),
        });
    }
    let gamma = options.gamma.unwrap_or_else(|| default_gamma(n));
    let lambda = plugin_lambda(n, p, options.c, gamma)?;
    let design = GramDesign::new(controls, true);
    let centered = design.centered();

    let mut targets: Vec<(String, &[f64])> = focal.iter().map(|(n, v)| (n.clone(), v.as_slice())).collect();
    targets.sort_by(|a, b| a.0.cmp(&b.0));
    targets.insert(0, ("y".to_string(), y));

    let audits = targets
        .par_iter()
        .map(|(name, t)| {
            let fit = refined_lasso(&design, &centered, t, cluster_id, lambda, options)?;
            Ok((name.clone(), fit))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut selected = vec![false; p];
    let mut warnings = Vec::new();
    let regressions = audits
        .into_iter()
        .map(|(target, (fit, loadings, w))| {
            for &j in &fit.active_set {
                selected[j] = true;
            }
            warnings.extend(w.into_iter().map(|m| format!("{target}: {m}")));
            if !fit.converged {
                warnings.push(format!("{target}: lasso hit max_iter"));
            }
            RegressionAudit {
                active: fit.active_set.iter().map(|&j| control_names[j].clone()).collect(),
                target,
                loadings,
                converged: fit.converged,
                kkt_violation: fit.kkt_violation,
            }
        })
        .collect();
    let union = (0..p).filter(|&j| selected[j]).map(|j| control_names[j].clone()).collect();
    Ok(PdsSelection {
        lambda,
        control_names: control_names.to_vec(),
        regressions,
        union,
        warnings,
    })
}

/// One LASSO with loadings from intercept-only residuals, then a second
/// with loadings from post-LASSO least-squares residuals. An exact
/// first-pass fit would zero every refined loading, so it is kept as is.
fn refined_lasso(
    design: &GramDesign,
    centered: &DMatrix<f64>,
    target: &[f64],
    cluster_id: &[String],
    lambda: f64,
    options: &PdsOptions,
) -> Result<(LassoFit, Vec<f64>, Vec<String>)> {
    let n = target.len();
    let p = design.ncols();
    let mean = target.iter().sum::<f64>() / n as f64;
    let resid0: Vec<f64> = target.iter().map(|v| v - mean).collect();
    let penalized = vec![true; p];

    let load0 = cluster_penalty_loadings(centered, cluster_id, &resid0)?;
    let fit0 = design.solve(target, &penalized, &load0.values, lambda, options.tolerance, options.max_iter)?;
    let resid1 = if fit0.active_set.is_empty() {
        resid0
    } else {
        let mut xs = DMatrix::from_element(n, fit0.active_set.len() + 1, 1.0);
        for (k, &j) in fit0.active_set.iter().enumerate() {
            xs.set_column(k + 1, &design.x.column(j));
        }
        let yv = DVector::from_column_slice(target);
        let coef = least_squares(&xs, &yv)?;
        (yv - xs * coef).iter().copied().collect()
    };
    let ss = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    if ss(&resid1) <= 1e-12 * ss(&target.iter().map(|v| v - mean).collect::<Vec<_>>()) {
        let mut warnings = load0.warnings;
        warnings.push("exact fit on first-pass controls; loading refinement skipped".into());
        return Ok((fit0, load0.values, warnings));
    }
    let load1 = cluster_penalty_loadings(centered, cluster_id, &resid1)?;
    let fit1 = design.solve(target, &penalized, &load1.values, lambda, options.tolerance, options.max_iter)?;
    Ok((fit1, load1.values, load1.warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn data(n: usize, seed: u64) -> (Vec<f64>, Vec<(String, Vec<f64>)>, DMatrix<f64>, Vec<String>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let controls = DMatrix::from_fn(n, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d: Vec<f64> = (0..n)
            .map(|i| 0.8 * controls[(i, 0)] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.5 * d[i] + 1.0 * controls[(i, 0)] + 0.7 * controls[(i, 3)] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let names = (0..6).map(|j| format!("c{j}")).collect();
        let clusters = (0..n).map(|i| format!("g{}", i / 4)).collect();
        (y, vec![("d".into(), d)], controls, names, clusters)
    }

    #[test]
    fn selects_confounder_and_outcome_predictor() {
        let (y, focal, x, names, cl) = data(1000, 1);
        let sel = pds_select(&y, &focal, &x, &names, &cl, &PdsOptions::default()).unwrap();
        assert!(sel.union.contains(&"c0".to_string()));
        assert!(sel.union.contains(&"c3".to_string()));
        assert_eq!(sel.regressions[0].target, "y");
        assert!(sel.regressions.iter().all(|r| r.kkt_violation < 1e-8));
    }

    #[test]
    fn no_controls_selects_nothing() {
        let (y, focal, _, _, cl) = data(50, 2);
        let sel = pds_select(&y, &focal, &DMatrix::zeros(50, 0), &[], &cl, &PdsOptions::default()).unwrap();
        assert!(sel.union.is_empty());
    }

    #[test]
    fn duplicate_of_focal_is_selected() {
        let (y, focal, mut x, names, cl) = data(300, 3);
        x.set_column(5, &DVector::from_column_slice(&focal[0].1));
        let sel = pds_select(&y, &focal, &x, &names, &cl, &PdsOptions::default()).unwrap();
        let d_reg = sel.regressions.iter().find(|r| r.target == "d").unwrap();
        assert!(d_reg.active.contains(&"c5".to_string()));
    }

    #[test]
    fn exact_fit_keeps_first_pass() {
        let (y, _, x, names, cl) = data(400, 5);
        let sum: Vec<f64> = (0..400).map(|i| x[(i, 1)] + x[(i, 2)]).collect();
        let sel = pds_select(&y, &[("s".into(), sum)], &x, &names, &cl, &PdsOptions::default()).unwrap();
        let s_reg = sel.regressions.iter().find(|r| r.target == "s").unwrap();
        assert_eq!(s_reg.active, vec!["c1".to_string(), "c2".to_string()]);
        assert!(sel.warnings.iter().any(|w| w.contains("refinement skipped")));
    }

    #[test]
    fn focal_order_does_not_matter() {
        let (y, mut focal, x, names, cl) = data(400, 4);
        let extra: Vec<f64> = (0..400).map(|i| x[(i, 2)] + (i % 7) as f64 * 0.1).collect();
        focal.push(("a_extra".into(), extra));
        let a = pds_select(&y, &focal, &x, &names, &cl, &PdsOptions::default()).unwrap();
        focal.reverse();
        let b = pds_select(&y, &focal, &x, &names, &cl, &PdsOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
