//! Ordered probit: `P(y = i) = Φ(κ_i − xᵀβ) − Φ(κ_{i−1} − xᵀβ)` with
//! `κ₀ = −∞`, `κ_I = +∞`.
//!
//! Cutpoints are parameterized as `κ₁` followed by log-increments
//! `a_m = ln(κ_m − κ_{m−1})`, which keeps them strictly increasing.

use nalgebra::{DMatrix, DVector};

use super::normal::{self, ln_interval_grad};
use super::optim::{maximize, OptimOptions, OptimResult};
use super::sandwich::{cluster_sandwich_vcov, info_criteria};
use super::{check_identification, p_value};
use crate::features::DesignMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct OrderedOptions {
    pub optim: OptimOptions,
    /// Number of outcome categories `I`; defaults to the largest observed value.
    pub n_categories: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct OrderedFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub cutpoints: Vec<f64>,
    pub loglik: f64,
    /// Clustered covariance over `(β, κ₁, a₂, …, a_{I−1})`.
    pub vcov: DMatrix<f64>,
    pub converged: bool,
    pub n: usize,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub iterations: usize,
    pub grad_max_norm: f64,
    /// Original outcome value of each model category.
    pub categories: Vec<i64>,
    pub n_clusters: usize,
    pub warnings: Vec<String>,
    /// Log-likelihood after each accepted optimizer step.
    pub trace: Vec<f64>,
}

impl OrderedFit {
    pub fn se(&self) -> Vec<f64> {
        (0..self.beta.len())
            .map(|j| self.vcov[(j, j)].max(0.0).sqrt())
            .collect()
    }

    /// `(estimate, standard error)` of a named coefficient.
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

    /// Delta-method standard errors of the cutpoints.
    pub fn cutpoint_se(&self) -> Vec<f64> {
        let p = self.beta.len();
        let theta = theta_from_cutpoints(&self.cutpoints).expect("fitted cutpoints are increasing");
        (0..self.cutpoints.len())
            .map(|m| {
                let mut g = DVector::zeros(self.vcov.ncols());
                g[p] = 1.0;
                for t in 1..=m {
                    g[p + t] = theta[t].exp();
                }
                (g.transpose() * &self.vcov * &g)[(0, 0)].max(0.0).sqrt()
            })
            .collect()
    }

    pub fn n_categories(&self) -> usize {
        self.cutpoints.len() + 1
    }
}

/// Maps increasing cutpoints to `(κ₁, ln Δκ₂, …)`.
pub fn theta_from_cutpoints(cutpoints: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cutpoints.len());
    for (m, &k) in cutpoints.iter().enumerate() {
        if !k.is_finite() {
            return Err(Error::Contract("cutpoints must be finite".into()));
        }
        if m == 0 {
            out.push(k);
        } else {
            let d = k - cutpoints[m - 1];
            if d <= 0.0 {
                return Err(Error::Contract(format!(
                    "cutpoints not strictly increasing at position {}",
                    m + 1
                )));
            }
            out.push(d.ln());
        }
    }
    Ok(out)
}

pub fn cutpoints_from_theta(cut_theta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(cut_theta.len());
    for (m, &a) in cut_theta.iter().enumerate() {
        if m == 0 {
            out.push(a);
        } else {
            out.push(out[m - 1] + a.exp());
        }
    }
    out
}

/// Log-likelihood and gradient over `(β, κ₁, a₂, …)` for outcomes coded
/// `1..=I` with `I = cutpoints.len() + 1`.
pub fn ordered_loglik_grad(
    beta: &[f64],
    cutpoints: &[f64],
    matrix: &DesignMatrix,
) -> Result<(f64, Vec<f64>)> {
    if beta.len() != matrix.ncols() {
        return Err(Error::Contract("beta length does not match columns".into()));
    }
    let mut theta = beta.to_vec();
    theta.extend(theta_from_cutpoints(cutpoints)?);
    let ncat = cutpoints.len() + 1;
    let y = matrix
        .y
        .iter()
        .map(|&v| {
            if v >= 1 && v as usize <= ncat {
                Ok(v as usize - 1)
            } else {
                Err(Error::Contract(format!("outcome {v} outside 1..={ncat}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let model = OrderedModel {
        x: &matrix.x,
        y,
        ncat,
    };
    let (ll, g, _) = model.eval(&DVector::from_vec(theta), false);
    Ok((ll, g.iter().copied().collect()))
}

pub(crate) struct OrderedModel<'a> {
    pub x: &'a DMatrix<f64>,
    /// Zero-based category per row.
    pub y: Vec<usize>,
    pub ncat: usize,
}

impl OrderedModel<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.x.ncols(), self.ncat - 1)
    }

    pub fn eval(
        &self,
        theta: &DVector<f64>,
        want_scores: bool,
    ) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let (p, m) = self.dims();
        let n = self.x.nrows();
        let beta = theta.rows(0, p);
        let xb = self.x * beta;
        let cut_theta: Vec<f64> = theta.rows(p, m).iter().copied().collect();
        let kappa = cutpoints_from_theta(&cut_theta);
        let exp_a: Vec<f64> = cut_theta.iter().map(|a| a.exp()).collect();

        let mut ll = 0.0;
        let mut w = DVector::zeros(n);
        let mut gk = vec![0.0; m];
        let mut scores = want_scores.then(|| DMatrix::zeros(n, p + m));
        for i in 0..n {
            let j = self.y[i];
            let lo = if j == 0 { f64::NEG_INFINITY } else { kappa[j - 1] - xb[i] };
            let hi = if j == m { f64::INFINITY } else { kappa[j] - xb[i] };
            let (l, dlo, dhi) = ln_interval_grad(lo, hi);
            ll += l;
            w[i] = -(dlo + dhi);
            if j > 0 {
                gk[j - 1] += dlo;
            }
            if j < m {
                gk[j] += dhi;
            }
            if let Some(s) = scores.as_mut() {
                for c in 0..p {
                    s[(i, c)] = w[i] * self.x[(i, c)];
                }
                // d κ_q / d θ_t is 1 for t = 0 and exp(a_t) for 1 ≤ t ≤ q.
                for t in 0..m {
                    let scale = if t == 0 { 1.0 } else { exp_a[t] };
                    let mut v = 0.0;
                    if j > 0 && j - 1 >= t {
                        v += dlo;
                    }
                    if j < m && j >= t {
                        v += dhi;
                    }
                    s[(i, p + t)] = scale * v;
                }
            }
        }
        let gb = self.x.tr_mul(&w);
        let mut grad = DVector::zeros(p + m);
        grad.rows_mut(0, p).copy_from(&gb);
        let mut tail = 0.0;
        for t in (0..m).rev() {
            tail += gk[t];
            grad[p + t] = if t == 0 { tail } else { exp_a[t] * tail };
        }
        (ll, grad, scores)
    }

    /// Log-likelihood, gradient and analytic Hessian over `θ`.
    pub fn eval_hessian(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (p, m) = self.dims();
        let n = self.x.nrows();
        let xb = self.x * theta.rows(0, p);
        let cut_theta: Vec<f64> = theta.rows(p, m).iter().copied().collect();
        let kappa = cutpoints_from_theta(&cut_theta);

        // Derivatives with respect to the index xβ and the raw cutpoints κ.
        let mut ll = 0.0;
        let mut w = DVector::zeros(n);
        let mut c = DVector::zeros(n);
        let mut bk = DMatrix::zeros(n, m);
        let mut gk = DVector::zeros(m);
        let mut hkk = DMatrix::zeros(m, m);
        for i in 0..n {
            let j = self.y[i];
            let lo = if j == 0 { f64::NEG_INFINITY } else { kappa[j - 1] - xb[i] };
            let hi = if j == m { f64::INFINITY } else { kappa[j] - xb[i] };
            let (l, dlo, dhi) = ln_interval_grad(lo, hi);
            ll += l;
            let h_ll = if lo.is_finite() { -lo * dlo - dlo * dlo } else { 0.0 };
            let h_hh = if hi.is_finite() { -hi * dhi - dhi * dhi } else { 0.0 };
            let h_lh = -dlo * dhi;
            w[i] = -(dlo + dhi);
            c[i] = h_ll + 2.0 * h_lh + h_hh;
            if j > 0 {
                gk[j - 1] += dlo;
                hkk[(j - 1, j - 1)] += h_ll;
                bk[(i, j - 1)] = -(h_ll + h_lh);
            }
            if j < m {
                gk[j] += dhi;
                hkk[(j, j)] += h_hh;
                bk[(i, j)] = -(h_hh + h_lh);
            }
            if j > 0 && j < m {
                hkk[(j - 1, j)] += h_lh;
                hkk[(j, j - 1)] += h_lh;
            }
        }
        let mut xc = self.x.clone();
        for (i, mut row) in xc.row_iter_mut().enumerate() {
            row *= c[i];
        }
        let hbb = self.x.tr_mul(&xc);
        let hbk = self.x.tr_mul(&bk);

        // Chain rule to (κ₁, a₂, …): κ_q = κ₁ + Σ_{t≤q} exp(a_t).
        let exp_a: Vec<f64> = cut_theta.iter().map(|a| a.exp()).collect();
        let jac = DMatrix::from_fn(m, m, |q, t| match t {
            0 => 1.0,
            t if t <= q => exp_a[t],
            _ => 0.0,
        });
        let gcut = jac.tr_mul(&gk);
        let mut hcc = jac.tr_mul(&(&hkk * &jac));
        for t in 1..m {
            hcc[(t, t)] += exp_a[t] * gk.rows(t, m - t).sum();
        }
        let hbc = &hbk * &jac;

        let mut grad = DVector::zeros(p + m);
        grad.rows_mut(0, p).copy_from(&self.x.tr_mul(&w));
        grad.rows_mut(p, m).copy_from(&gcut);
        let mut h = DMatrix::zeros(p + m, p + m);
        h.view_mut((0, 0), (p, p)).copy_from(&hbb);
        h.view_mut((0, p), (p, m)).copy_from(&hbc);
        h.view_mut((p, 0), (m, p)).copy_from(&hbc.transpose());
        h.view_mut((p, p), (m, m)).copy_from(&hcc);
        (ll, grad, h)
    }

    /// Newton–Raphson with step halving. `None` when the Hessian stops being
    /// negative definite, no step improves the objective, or 200 steps pass
    /// without convergence; an unconverged result at `max_iter`.
    fn newton(&self, theta0: DVector<f64>, opts: &OptimOptions) -> Option<OptimResult> {
        let mut theta = theta0;
        let (mut value, mut grad, mut hess) = self.eval_hessian(&theta);
        let mut trace = vec![value];
        let mut iterations = 0;
        while grad.amax() >= opts.grad_tol {
            if iterations >= opts.max_iter {
                return Some(OptimResult { theta, value, grad, iterations, converged: false, trace });
            }
            if iterations >= 200 {
                return None;
            }
            iterations += 1;
            let dir = (-&hess).cholesky()?.solve(&grad);
            let mut step = 1.0;
            loop {
                let cand = &theta + &dir * step;
                let (v, g, h) = self.eval_hessian(&cand);
                if v.is_finite() && v >= value - 1e-13 * value.abs().max(1.0) {
                    theta = cand;
                    value = v;
                    grad = g;
                    hess = h;
                    break;
                }
                step *= 0.5;
                if step < 1e-10 {
                    return None;
                }
            }
            trace.push(value);
        }
        Some(OptimResult { theta, value, grad, iterations, converged: true, trace })
    }

}

/// Recodes raw outcomes to consecutive zero-based categories, merging
/// unobserved levels into their lower neighbour.
fn recode(y: &[i64], n_categories: Option<usize>) -> Result<(Vec<usize>, Vec<i64>, Vec<String>)> {
    let max = *y.iter().max().ok_or_else(|| Error::Data("empty outcome".into()))?;
    let min = *y.iter().min().unwrap();
    let ncat = n_categories.unwrap_or(max.max(1) as usize);
    if min < 1 || max as usize > ncat {
        return Err(Error::Contract(format!(
            "outcome values must lie in 1..={ncat} (found {min}..={max})"
        )));
    }
    let mut seen = vec![false; ncat];
    for &v in y {
        seen[v as usize - 1] = true;
    }
    let observed: Vec<i64> = (1..=ncat as i64).filter(|v| seen[*v as usize - 1]).collect();
    if observed.len() < 2 {
        return Err(Error::Identification("outcome has fewer than two observed categories".into()));
    }
    let mut warnings = Vec::new();
    let missing: Vec<String> = (1..=ncat as i64)
        .filter(|v| !seen[*v as usize - 1])
        .map(|v| v.to_string())
        .collect();
    if !missing.is_empty() {
        warnings.push(format!(
            "unobserved categories [{}] merged with the adjacent lower category",
            missing.join(", ")
        ));
    }
    let codes = y
        .iter()
        .map(|v| observed.binary_search(v).expect("value observed"))
        .collect();
    Ok((codes, observed, warnings))
}

/// Starting cutpoints at normal quantiles of the empirical cumulative shares.
pub(crate) fn start_cutpoints(y: &[usize], ncat: usize) -> Vec<f64> {
    let n = y.len() as f64;
    let mut counts = vec![0.0; ncat];
    for &c in y {
        counts[c] += 1.0;
    }
    let mut cum = 0.0;
    (0..ncat - 1)
        .map(|m| {
            cum += counts[m];
            normal::quantile(cum / n)
        })
        .collect()
}

/// Category probabilities `Φ(κ_j − xβ) − Φ(κ_{j−1} − xβ)` for a linear index.
pub fn category_probs(kappa: &[f64], xb: f64) -> Vec<f64> {
    let m = kappa.len();
    (0..=m)
        .map(|j| {
            let lo = if j == 0 { f64::NEG_INFINITY } else { kappa[j - 1] - xb };
            let hi = if j == m { f64::INFINITY } else { kappa[j] - xb };
            normal::interval(lo, hi)
        })
        .collect()
}

pub fn fit_ordered_probit(matrix: &DesignMatrix, options: &OrderedOptions) -> Result<OrderedFit> {
    let n = matrix.nrows();
    if n == 0 {
        return Err(Error::Data("empty design matrix".into()));
    }
    let (y, categories, mut warnings) = recode(&matrix.y, options.n_categories)?;
    check_identification(&matrix.x, &matrix.names)?;
    let ncat = categories.len();
    let model = OrderedModel {
        x: &matrix.x,
        y,
        ncat,
    };
    let (p, m) = model.dims();

    let mut theta0 = DVector::zeros(p + m);
    let start = theta_from_cutpoints(&start_cutpoints(&model.y, ncat))?;
    for (t, v) in start.iter().enumerate() {
        theta0[p + t] = *v;
    }

    let res = match model.newton(theta0.clone(), &options.optim) {
        Some(r) => r,
        None => maximize(
            |th| {
                let (ll, g, _) = model.eval(th, false);
                (ll, g)
            },
            theta0,
            &options.optim,
        ),
    };
    let grad_max_norm = res.grad.amax();
    if !res.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations with gradient max-norm {grad_max_norm:e}",
            res.iterations
        ));
    }

    let information = -model.eval_hessian(&res.theta).2;
    let (_, _, scores) = model.eval(&res.theta, true);
    let (clusters, n_clusters) = matrix.cluster_codes();
    let vcov = match cluster_sandwich_vcov(&information, &scores.expect("scores"), &clusters) {
        Ok(v) => v,
        Err(e) if !res.converged => {
            warnings.push(format!("covariance unavailable: {e}"));
            DMatrix::from_element(p + m, p + m, f64::NAN)
        }
        Err(e) => return Err(e),
    };

    let k = p + m;
    let ic = info_criteria(res.value, k, n);
    let cut_theta: Vec<f64> = res.theta.rows(p, m).iter().copied().collect();
    Ok(OrderedFit {
        names: matrix.names.clone(),
        beta: res.theta.rows(0, p).iter().copied().collect(),
        cutpoints: cutpoints_from_theta(&cut_theta),
        loglik: res.value,
        vcov,
        converged: res.converged,
        n,
        k,
        aic: ic.aic,
        bic: ic.bic,
        iterations: res.iterations,
        grad_max_norm,
        categories,
        n_clusters,
        warnings,
        trace: res.trace,
    })
}
