//! Binary probit with an intercept.

use nalgebra::{DMatrix, DVector};

use super::normal::{cdf, ln_cdf, mills, pdf};
use super::optim::{maximize, numeric_hessian, OptimOptions};
use super::sandwich::{cluster_sandwich_vcov, info_criteria};
use super::{check_identification, p_value};
use crate::features::DesignMatrix;
use crate::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Clone, Default)]
pub struct BinaryOptions {
    pub optim: OptimOptions,
}

/// Fit of a binary or random-intercept probit. `names[0]` is the intercept.
#[derive(Debug, Clone)]
pub struct BinaryFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub loglik: f64,
    /// Clustered covariance over `beta` (and `ln σ_u` for a random-intercept
    /// fit with positive scale, as the last entry).
    pub vcov: DMatrix<f64>,
    pub converged: bool,
    pub n: usize,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub sigma_u: Option<f64>,
    pub group_label: Option<String>,
    pub iterations: usize,
    pub grad_max_norm: f64,
    pub n_clusters: usize,
    pub warnings: Vec<String>,
    pub trace: Vec<f64>,
}

impl BinaryFit {
    pub fn se(&self) -> Vec<f64> {
        (0..self.beta.len())
            .map(|j| self.vcov[(j, j)].max(0.0).sqrt())
            .collect()
    }

    pub fn coef(&self, name: &str) -> Option<(f64, f64)> {
        let j = self.names.iter().position(|n| n == name)?;
        Some((self.beta[j], self.vcov[(j, j)].max(0.0).sqrt()))
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(self.se())
            .map(|(b, s)| p_value(b / s))
            .collect()
    }

    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }
}

/// Prepends a column of ones.
pub(crate) fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}

/// Signs `q_i = 2y_i − 1`, validating a 0/1 outcome with both classes.
pub(crate) fn signs(y: &[i64]) -> Result<Vec<f64>> {
    let mut ones = 0;
    for &v in y {
        match v {
            0 => {}
            1 => ones += 1,
            _ => return Err(Error::Contract(format!("binary outcome must be 0/1, found {v}"))),
        }
    }
    if ones == 0 || ones == y.len() {
        return Err(Error::Identification("binary outcome has a single class".into()));
    }
    Ok(y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect())
}

/// `ln Φ(z)` and `d ln Φ(z) / dz`.
#[inline]
pub(crate) fn ln_cdf_and_mills(z: f64) -> (f64, f64) {
    if z > -30.0 {
        let c = cdf(z);
        (c.ln(), pdf(z) / c)
    } else {
        (ln_cdf(z), mills(z))
    }
}

pub(crate) struct BinaryModel {
    pub xa: DMatrix<f64>,
    pub q: Vec<f64>,
}

impl BinaryModel {
    pub fn eval(&self, beta: &DVector<f64>, want_scores: bool) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let xb = &self.xa * beta;
        let n = self.q.len();
        let mut ll = 0.0;
        let mut w = DVector::zeros(n);
        for i in 0..n {
            let (l, m) = ln_cdf_and_mills(self.q[i] * xb[i]);
            ll += l;
            w[i] = self.q[i] * m;
        }
        let grad = self.xa.tr_mul(&w);
        let scores = want_scores.then(|| {
            let mut s = self.xa.clone();
            for i in 0..n {
                s.row_mut(i).scale_mut(w[i]);
            }
            s
        });
        (ll, grad, scores)
    }
}

pub fn fit_binary_probit(matrix: &DesignMatrix, options: &BinaryOptions) -> Result<BinaryFit> {
    let n = matrix.nrows();
    let q = signs(&matrix.y)?;
    check_identification(&matrix.x, &matrix.names)?;
    let model = BinaryModel {
        xa: with_intercept(&matrix.x),
        q,
    };
    let k = model.xa.ncols();
    let mean = matrix.y.iter().sum::<i64>() as f64 / n as f64;
    let mut beta0 = DVector::zeros(k);
    beta0[0] = super::normal::quantile(mean);

    let res = maximize(
        |b| {
            let (ll, g, _) = model.eval(b, false);
            (ll, g)
        },
        beta0,
        &options.optim,
    );
    let mut warnings = Vec::new();
    let mut converged = res.converged;
    if let Some(msg) = separation_diagnostic(&model, &res.theta) {
        converged = false;
        warnings.push(msg);
    }
    if !res.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations with gradient max-norm {:e}",
            res.iterations,
            res.grad.amax()
        ));
    }

    let mut g = |b: &DVector<f64>| model.eval(b, false).1;
    let information = -numeric_hessian(&mut g, &res.theta);
    let (_, _, scores) = model.eval(&res.theta, true);
    let (clusters, n_clusters) = matrix.cluster_codes();
    let vcov = match cluster_sandwich_vcov(&information, &scores.expect("scores"), &clusters) {
        Ok(v) => v,
        Err(e) if !converged => {
            warnings.push(format!("covariance unavailable: {e}"));
            DMatrix::from_element(k, k, f64::NAN)
        }
        Err(e) => return Err(e),
    };
    let ic = info_criteria(res.value, k, n);
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(matrix.names.iter().cloned());
    Ok(BinaryFit {
        names,
        beta: res.theta.iter().copied().collect(),
        loglik: res.value,
        vcov,
        converged,
        n,
        k,
        aic: ic.aic,
        bic: ic.bic,
        sigma_u: None,
        group_label: None,
        iterations: res.iterations,
        grad_max_norm: res.grad.amax(),
        n_clusters,
        warnings,
        trace: res.trace,
    })
}

/// Flags diverging coefficients that perfectly predict part of the sample.
fn separation_diagnostic(model: &BinaryModel, beta: &DVector<f64>) -> Option<String> {
    let xb = &model.xa * beta;
    let perfect = xb
        .iter()
        .zip(&model.q)
        .filter(|(v, q)| **v * **q > 8.0)
        .count();
    let largest = beta.iter().skip(1).fold(0.0_f64, |m, b| m.max(b.abs()));
    (perfect > 0 && largest > 10.0).then(|| {
        format!(
            "perfect separation suspected: {perfect} rows predicted with |index| > 8, largest |coefficient| {largest:.2}"
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probit::ordered::{fit_ordered_probit, OrderedOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn simulate(n: usize, beta: &[f64], seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = beta.len() - 1;
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = (0..n)
            .map(|i| {
                let idx = beta[0] + (0..p).map(|j| x[(i, j)] * beta[j + 1]).sum::<f64>();
                i64::from(idx + rng.sample::<f64, _>(StandardNormal) > 0.0)
            })
            .collect();
        DesignMatrix::new(
            y,
            x,
            (0..p).map(|j| format!("x{j}")).collect(),
            vec![false; p],
            (0..n).map(|i| format!("g{}", i % 20)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn intercept_only_matches_quantile() {
        let n = 100;
        let y: Vec<i64> = (0..n).map(|i| i64::from(i < 17)).collect();
        let m = DesignMatrix::new(y, DMatrix::zeros(n, 0), vec![], vec![], vec!["a".into(); n]).unwrap();
        let fit = fit_binary_probit(&m, &BinaryOptions::default()).unwrap();
        assert!((fit.intercept() - -0.954_165_253_146_194_3).abs() < 1e-7);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = simulate(200, &[-0.5, 0.8, -0.3], 4);
        let model = BinaryModel {
            xa: with_intercept(&m.x),
            q: signs(&m.y).unwrap(),
        };
        let b = DVector::from_vec(vec![-0.2, 0.5, 0.1]);
        let (_, g, _) = model.eval(&b, false);
        for j in 0..3 {
            let mut up = b.clone();
            let mut dn = b.clone();
            up[j] += 1e-5;
            dn[j] -= 1e-5;
            let fd = (model.eval(&up, false).0 - model.eval(&dn, false).0) / 2e-5;
            assert!((fd - g[j]).abs() / g[j].abs().max(1.0) < 1e-6);
        }
    }

    #[test]
    fn flipping_labels_flips_signs() {
        let m = simulate(500, &[0.2, 0.7, -0.4], 8);
        let fit = fit_binary_probit(&m, &BinaryOptions::default()).unwrap();
        let mut flipped = m.clone();
        flipped.y.iter_mut().for_each(|v| *v = 1 - *v);
        let fit2 = fit_binary_probit(&flipped, &BinaryOptions::default()).unwrap();
        for (a, b) in fit.beta.iter().zip(&fit2.beta) {
            assert!((a + b).abs() < 1e-6);
        }
        assert!((fit.loglik - fit2.loglik).abs() < 1e-8);
    }

    #[test]
    fn ordered_with_two_categories_is_binary() {
        let m = simulate(300, &[0.3, 0.6, -0.2], 2);
        let bin = fit_binary_probit(&m, &BinaryOptions::default()).unwrap();
        let mut o = m.clone();
        o.y.iter_mut().for_each(|v| *v += 1);
        let ord = fit_ordered_probit(&o, &OrderedOptions::default()).unwrap();
        assert!((bin.loglik - ord.loglik).abs() < 1e-8);
        assert!((bin.intercept() + ord.cutpoints[0]).abs() < 1e-6);
        for j in 0..2 {
            assert!((bin.beta[j + 1] - ord.beta[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn separation_is_flagged() {
        let n = 60;
        let x = DMatrix::from_fn(n, 1, |i, _| (i as f64 - 29.5) * 0.1);
        let y = (0..n).map(|i| i64::from(i >= 30)).collect();
        let m = DesignMatrix::new(y, x, vec!["x".into()], vec![false], vec!["a".into(); n]).unwrap();
        let fit = fit_binary_probit(&m, &BinaryOptions::default()).unwrap();
        assert!(!fit.converged);
        assert!(fit.warnings.iter().any(|w| w.contains("separation")));
    }

    #[test]
    fn single_class_rejected() {
        let m = DesignMatrix::new(vec![1; 5], DMatrix::zeros(5, 0), vec![], vec![], vec!["a".into(); 5]).unwrap();
        assert!(fit_binary_probit(&m, &BinaryOptions::default()).is_err());
    }
}
