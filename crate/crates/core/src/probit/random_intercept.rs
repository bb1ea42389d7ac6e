//! Probit with a normal random intercept per group:
//!
//! `L_g = ∫ Π_{i∈g} Φ(q_i (x_iᵀβ + u)) φ(u/σ_u)/σ_u du`, `q_i = 2y_i − 1`,
//!
//! evaluated with adaptive Gauss–Hermite quadrature. Each group's nodes
//! are centred at the posterior mode of `u` and scaled by the posterior
//! curvature; these anchors are held fixed within an optimizer run and
//! refreshed between runs until the log-likelihood settles.

use nalgebra::{DMatrix, DVector};

use super::binary::{fit_binary_probit, ln_cdf_and_mills, signs, with_intercept, BinaryFit, BinaryOptions, INTERCEPT};
use super::optim::{maximize_warm, numeric_hessian, OptimOptions};
use super::quadrature::gauss_hermite;
use super::sandwich::{cluster_sandwich_vcov, info_criteria};
use crate::features::design::group_codes;
use crate::features::DesignMatrix;
use crate::{Error, Result};

pub const LN_SIGMA: &str = "ln_sigma_u";

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone)]
pub struct RandomInterceptOptions {
    pub optim: OptimOptions,
    pub quad_nodes: usize,
    pub group_label: String,
}

impl Default for RandomInterceptOptions {
    fn default() -> Self {
        Self {
            optim: OptimOptions::default(),
            quad_nodes: 12,
            group_label: "terminal x date".into(),
        }
    }
}

/// Posterior mode and scale of one group's intercept.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Anchor {
    mode: f64,
    scale: f64,
}

pub(crate) struct RandomInterceptModel {
    xa: DMatrix<f64>,
    q: Vec<f64>,
    groups: Vec<Vec<usize>>,
    nodes: Vec<f64>,
    /// `ln W_m + t_m²` for the physicists' rule.
    ln_weights: Vec<f64>,
}

impl RandomInterceptModel {
    pub fn new(matrix: &DesignMatrix, groups: &[String], quad_nodes: usize) -> Result<Self> {
        if groups.len() != matrix.nrows() {
            return Err(Error::Contract("one group label per row required".into()));
        }
        if quad_nodes < 4 {
            return Err(Error::Config(format!("quad_nodes must be at least 4, got {quad_nodes}")));
        }
        let (codes, g) = group_codes(groups);
        let mut members = vec![Vec::new(); g];
        for (i, c) in codes.iter().enumerate() {
            members[*c].push(i);
        }
        let (nodes, weights) = gauss_hermite(quad_nodes);
        let ln_weights = nodes.iter().zip(&weights).map(|(t, w)| w.ln() + t * t).collect();
        Ok(Self {
            xa: with_intercept(&matrix.x),
            q: signs(&matrix.y)?,
            groups: members,
            nodes,
            ln_weights,
        })
    }

    fn pooled_loglik(&self, xb: &DVector<f64>) -> f64 {
        self.q
            .iter()
            .zip(xb.iter())
            .map(|(q, v)| ln_cdf_and_mills(q * v).0)
            .sum()
    }

    /// Newton search for each group's posterior mode of `u`.
    pub fn anchors(&self, theta: &DVector<f64>) -> Vec<Anchor> {
        let k = self.xa.ncols();
        let xb = &self.xa * theta.rows(0, k);
        let prec = (-2.0 * theta[k]).exp();
        self.groups
            .iter()
            .map(|members| {
                let curvature = |u: f64| -> (f64, f64, f64) {
                    let mut h = -0.5 * u * u * prec;
                    let mut d1 = -u * prec;
                    let mut d2 = -prec;
                    for &i in members {
                        let z = self.q[i] * (xb[i] + u);
                        let (l, lam) = ln_cdf_and_mills(z);
                        h += l;
                        d1 += self.q[i] * lam;
                        d2 -= lam * (z + lam);
                    }
                    (h, d1, d2)
                };
                let mut u = 0.0;
                let (mut h, mut d1, mut d2) = curvature(u);
                for _ in 0..50 {
                    let step = -d1 / d2;
                    let mut t = 1.0;
                    let mut accepted = false;
                    for _ in 0..30 {
                        let cand = u + t * step;
                        let (hc, d1c, d2c) = curvature(cand);
                        if hc >= h - 1e-12 * h.abs() {
                            u = cand;
                            h = hc;
                            d1 = d1c;
                            d2 = d2c;
                            accepted = true;
                            break;
                        }
                        t *= 0.5;
                    }
                    if !accepted || (t * step).abs() < 1e-10 {
                        break;
                    }
                }
                Anchor {
                    mode: u,
                    scale: 1.0 / (-d2).sqrt(),
                }
            })
            .collect()
    }

    /// Log-likelihood at `(β, σ_u)` with self-consistent anchors; `σ_u = 0`
    /// gives the pooled probit.
    pub fn loglik(&self, beta: &DVector<f64>, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return self.pooled_loglik(&(&self.xa * beta));
        }
        let theta = beta.clone().insert_row(beta.len(), sigma.ln());
        let anchors = self.anchors(&theta);
        self.eval(&theta, &anchors, false).0
    }

    /// Log-likelihood, gradient over `(β, ln σ_u)` and optional per-group
    /// scores, with the quadrature anchors held fixed.
    pub fn eval(
        &self,
        theta: &DVector<f64>,
        anchors: &[Anchor],
        want_scores: bool,
    ) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
        let k = self.xa.ncols();
        let ln_sigma = theta[k];
        let prec = (-2.0 * ln_sigma).exp();
        let xb = &self.xa * theta.rows(0, k);
        let nm = self.nodes.len();
        let n = self.q.len();

        let mut ll = 0.0;
        let mut w = DVector::zeros(n);
        let mut d_ln_sigma = 0.0;
        let mut scores = want_scores.then(|| DMatrix::zeros(self.groups.len(), k + 1));
        let mut a = vec![0.0; nm];
        let mut u = vec![0.0; nm];
        // Mills ratios per (member, node), reused for the gradient.
        let mut lam: Vec<f64> = Vec::new();
        for (g, members) in self.groups.iter().enumerate() {
            let Anchor { mode, scale } = anchors[g];
            let jac = (std::f64::consts::SQRT_2 * scale).ln();
            lam.clear();
            lam.resize(members.len() * nm, 0.0);
            for (m, t) in self.nodes.iter().enumerate() {
                u[m] = mode + std::f64::consts::SQRT_2 * scale * t;
                let mut sum = 0.0;
                for (r, &i) in members.iter().enumerate() {
                    let (l, mills) = ln_cdf_and_mills(self.q[i] * (xb[i] + u[m]));
                    sum += l;
                    lam[r * nm + m] = mills;
                }
                a[m] = self.ln_weights[m] + jac - 0.5 * u[m] * u[m] * prec - ln_sigma - LN_SQRT_2PI + sum;
            }
            let lg = log_sum_exp(&a);
            ll += lg;
            let post: Vec<f64> = a.iter().map(|v| (v - lg).exp()).collect();
            let g_sigma: f64 = post
                .iter()
                .zip(&u)
                .map(|(p, um)| p * (um * um * prec - 1.0))
                .sum();
            for (r, &i) in members.iter().enumerate() {
                w[i] = self.q[i] * (0..nm).map(|m| post[m] * lam[r * nm + m]).sum::<f64>();
            }
            d_ln_sigma += g_sigma;
            if let Some(s) = scores.as_mut() {
                for &i in members {
                    for j in 0..k {
                        s[(g, j)] += w[i] * self.xa[(i, j)];
                    }
                }
                s[(g, k)] = g_sigma;
            }
        }
        let gb = self.xa.tr_mul(&w);
        let mut grad = DVector::zeros(k + 1);
        grad.rows_mut(0, k).copy_from(&gb);
        grad[k] = d_ln_sigma;
        (ll, grad, scores)
    }
}

fn log_sum_exp(a: &[f64]) -> f64 {
    let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + a.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Random-intercept log-likelihood at given parameters (`beta` includes the
/// intercept first).
pub fn random_intercept_loglik(
    matrix: &DesignMatrix,
    groups: &[String],
    beta: &[f64],
    sigma_u: f64,
    quad_nodes: usize,
) -> Result<f64> {
    let model = RandomInterceptModel::new(matrix, groups, quad_nodes)?;
    if beta.len() != model.xa.ncols() {
        return Err(Error::Contract("beta length must be columns + 1".into()));
    }
    Ok(model.loglik(&DVector::from_column_slice(beta), sigma_u))
}

pub fn fit_random_intercept_probit(
    matrix: &DesignMatrix,
    groups: &[String],
    options: &RandomInterceptOptions,
) -> Result<BinaryFit> {
    let model = RandomInterceptModel::new(matrix, groups, options.quad_nodes)?;
    let pooled = fit_binary_probit(
        matrix,
        &BinaryOptions {
            optim: options.optim,
        },
    )?;
    let k = pooled.beta.len();
    let mut theta = DVector::zeros(k + 1);
    for j in 0..k {
        theta[j] = pooled.beta[j];
    }
    theta[k] = 0.3_f64.ln();
    let mut anchors = model.anchors(&theta);
    let mut res;
    let settled;
    let mut rounds = 0;
    let mut inv_h = None;
    loop {
        rounds += 1;
        let (r, h) = maximize_warm(
            |th| {
                let (ll, g, _) = model.eval(th, &anchors, false);
                (ll, g)
            },
            theta.clone(),
            inv_h.take(),
            &options.optim,
        );
        res = r;
        inv_h = Some(h);
        theta = res.theta.clone();
        anchors = model.anchors(&theta);
        let refreshed = model.eval(&theta, &anchors, false).0;
        if (refreshed - res.value).abs() < 1e-9 || rounds >= 8 {
            settled = (refreshed - res.value).abs() < 1e-6;
            break;
        }
    }
    let (value, grad, _) = model.eval(&theta, &anchors, false);
    res.value = value;
    res.grad = grad;
    res.converged = res.converged && settled && res.grad.amax() < options.optim.grad_tol.max(1e-5);
    let sigma = res.theta[k].exp();

    if sigma < 1e-4 || res.value <= pooled.loglik + 1e-9 {
        let mut fit = pooled;
        fit.sigma_u = Some(0.0);
        fit.group_label = Some(options.group_label.clone());
        fit.warnings
            .push("random-intercept scale collapsed to 0; pooled probit reported".into());
        return Ok(fit);
    }

    let mut warnings = Vec::new();
    if !res.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations with gradient max-norm {:e}",
            res.iterations,
            res.grad.amax()
        ));
    }
    let mut g = |th: &DVector<f64>| model.eval(th, &anchors, false).1;
    let information = -numeric_hessian(&mut g, &res.theta);
    let (_, _, scores) = model.eval(&res.theta, &anchors, true);

    // Groups nest in clusters when every group lies inside a single cluster.
    let (row_clusters, _) = matrix.cluster_codes();
    let mut group_clusters = Vec::with_capacity(model.groups.len());
    let mut nested = true;
    for members in &model.groups {
        let c = row_clusters[members[0]];
        nested &= members.iter().all(|&i| row_clusters[i] == c);
        group_clusters.push(c);
    }
    if !nested {
        warnings.push("groups cut across clusters; groups used as clusters".into());
        group_clusters = (0..model.groups.len()).collect();
    }
    let (group_clusters, n_clusters) = group_codes(
        &group_clusters.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    );
    let vcov = match cluster_sandwich_vcov(&information, &scores.expect("scores"), &group_clusters) {
        Ok(v) => v,
        Err(e) if !res.converged => {
            warnings.push(format!("covariance unavailable: {e}"));
            DMatrix::from_element(k + 1, k + 1, f64::NAN)
        }
        Err(e) => return Err(e),
    };

    let n = matrix.nrows();
    let ic = info_criteria(res.value, k + 1, n);
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(matrix.names.iter().cloned());
    Ok(BinaryFit {
        names,
        beta: res.theta.rows(0, k).iter().copied().collect(),
        loglik: res.value,
        vcov,
        converged: res.converged,
        n,
        k: k + 1,
        aic: ic.aic,
        bic: ic.bic,
        sigma_u: Some(sigma),
        group_label: Some(options.group_label.clone()),
        iterations: res.iterations,
        grad_max_norm: res.grad.amax(),
        n_clusters,
        warnings,
        trace: res.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probit::binary::BinaryModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub(crate) fn simulate(groups: usize, per: usize, sigma: f64, seed: u64) -> (DesignMatrix, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = groups * per;
        let x = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut y = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for g in 0..groups {
            let u: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
            for r in 0..per {
                let i = g * per + r;
                let e: f64 = rng.sample(StandardNormal);
                y.push(i64::from(-0.3 + 0.5 * x[(i, 0)] + u + e > 0.0));
                labels.push(format!("g{g}"));
            }
        }
        let m = DesignMatrix::new(y, x, vec!["x".into()], vec![false], labels.clone()).unwrap();
        (m, labels)
    }

    #[test]
    fn zero_scale_equals_pooled() {
        let (m, g) = simulate(40, 5, 0.8, 1);
        let beta = DVector::from_vec(vec![-0.2, 0.4]);
        let pooled = BinaryModel {
            xa: with_intercept(&m.x),
            q: signs(&m.y).unwrap(),
        }
        .eval(&beta, false)
        .0;
        let re = random_intercept_loglik(&m, &g, beta.as_slice(), 0.0, 12).unwrap();
        assert!((pooled - re).abs() < 1e-8);
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let (m, g) = simulate(40, 5, 1.0, 2);
        let a = random_intercept_loglik(&m, &g, &[-0.3, 0.5], 1.0, 12).unwrap();
        let b = random_intercept_loglik(&m, &g, &[-0.3, 0.5], 1.0, 32).unwrap();
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (m, g) = simulate(30, 6, 0.7, 3);
        let model = RandomInterceptModel::new(&m, &g, 12).unwrap();
        let th = DVector::from_vec(vec![-0.2, 0.6, (0.5f64).ln()]);
        let anchors = model.anchors(&th);
        let (_, grad, _) = model.eval(&th, &anchors, false);
        for j in 0..3 {
            let mut up = th.clone();
            let mut dn = th.clone();
            up[j] += 1e-5;
            dn[j] -= 1e-5;
            let fd = (model.eval(&up, &anchors, false).0 - model.eval(&dn, &anchors, false).0) / 2e-5;
            assert!((fd - grad[j]).abs() / grad[j].abs().max(1.0) < 1e-6, "component {j}");
        }
    }

    #[test]
    fn recovers_scale() {
        let (m, g) = simulate(200, 25, 1.0, 4);
        let fit = fit_random_intercept_probit(&m, &g, &RandomInterceptOptions::default()).unwrap();
        let s = fit.sigma_u.unwrap();
        assert!((0.7..=1.3).contains(&s), "sigma {s}");
        assert!(fit.converged);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let (m, g) = simulate(5, 5, 1.0, 5);
        assert!(matches!(
            fit_random_intercept_probit(&m, &g, &RandomInterceptOptions { quad_nodes: 3, ..Default::default() }),
            Err(Error::Config(_))
        ));
    }
}
