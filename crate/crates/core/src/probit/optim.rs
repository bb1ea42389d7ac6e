//! Quasi-Newton maximization with a Newton polish.
//!
//! BFGS on the inverse Hessian with Armijo backtracking; once BFGS stalls
//! or exhausts its budget, a few Newton steps on a finite-difference
//! Hessian of the analytic gradient drive the gradient below tolerance.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Convergence threshold on the gradient max-norm.
    pub grad_tol: f64,
    pub newton_steps: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-6,
            newton_steps: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub theta: DVector<f64>,
    pub value: f64,
    pub grad: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting at the initial point.
    pub trace: Vec<f64>,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Central-difference Hessian of an analytic gradient, symmetrized.
pub fn numeric_hessian<G>(grad: &mut G, theta: &DVector<f64>) -> DMatrix<f64>
where
    G: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let k = theta.len();
    let mut h = DMatrix::zeros(k, k);
    for j in 0..k {
        let step = 1e-5 * theta[j].abs().max(1.0);
        let mut up = theta.clone();
        up[j] += step;
        let mut dn = theta.clone();
        dn[j] -= step;
        let diff = (grad(&up) - grad(&dn)) / (2.0 * step);
        h.set_column(j, &diff);
    }
    (&h + h.transpose()) * 0.5
}

/// Maximizes `f`, which returns the objective and its gradient.
pub fn maximize<F>(f: F, theta0: DVector<f64>, opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    maximize_warm(f, theta0, None, opts).0
}

/// [`maximize`] starting from a given inverse-Hessian approximation of the
/// minimized objective; also returns the final approximation.
pub fn maximize_warm<F>(
    mut f: F,
    theta0: DVector<f64>,
    inv_h0: Option<DMatrix<f64>>,
    opts: &OptimOptions,
) -> (OptimResult, DMatrix<f64>)
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let k = theta0.len();
    let mut theta = theta0;
    let (mut value, mut grad) = f(&theta);
    let mut trace = vec![value];
    let mut fresh = inv_h0.is_none();
    let mut inv_h = inv_h0.unwrap_or_else(|| DMatrix::<f64>::identity(k, k));
    let mut iterations = 0;

    while iterations < opts.max_iter && max_abs(&grad) >= opts.grad_tol {
        iterations += 1;
        let mut dir = &inv_h * &grad;
        let mut slope = grad.dot(&dir);
        if !(slope > 0.0) {
            inv_h = DMatrix::identity(k, k);
            dir = grad.clone();
            slope = grad.dot(&dir);
            fresh = true;
        }
        if fresh {
            // Keep the first trial step bounded.
            let scale = 1.0 / max_abs(&dir).max(1.0);
            dir *= scale;
            slope *= scale;
        }
        let Some((t, v_new, g_new)) = line_search(&mut f, &theta, value, &grad, &dir, slope) else {
            if fresh {
                break;
            }
            inv_h = DMatrix::identity(k, k);
            fresh = true;
            continue;
        };
        let s = &dir * t;
        // Gradient change of the minimized objective −f.
        let y = &grad - &g_new;
        theta += &s;
        let sy = s.dot(&y);
        value = v_new;
        grad = g_new;
        trace.push(value);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                inv_h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &inv_h * &y;
            let yhy = y.dot(&hy);
            inv_h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
    }

    let mut steps = 0;
    while max_abs(&grad) >= opts.grad_tol && steps < opts.newton_steps {
        steps += 1;
        let mut g = |th: &DVector<f64>| f(th).1;
        let h = numeric_hessian(&mut g, &theta);
        let neg = -h;
        let Some(chol) = neg.cholesky() else { break };
        let dir = chol.solve(&grad);
        let slope = grad.dot(&dir);
        match line_search(&mut f, &theta, value, &grad, &dir, slope) {
            Some((t, v_new, g_new)) => {
                theta += &dir * t;
                value = v_new;
                grad = g_new;
                trace.push(value);
            }
            None => break,
        }
    }

    let res = OptimResult {
        converged: max_abs(&grad) < opts.grad_tol,
        theta,
        value,
        grad,
        iterations: iterations + steps,
        trace,
    };
    (res, inv_h)
}

/// Backtracking Armijo search. Near the optimum, where objective changes
/// drop below rounding, a step that keeps the value within rounding and
/// shrinks the gradient is also accepted.
fn line_search<F>(
    f: &mut F,
    theta: &DVector<f64>,
    value: f64,
    grad: &DVector<f64>,
    dir: &DVector<f64>,
    slope: f64,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut t = 1.0;
    let noise = 1e-13 * value.abs().max(1.0);
    let g0 = max_abs(grad);
    for _ in 0..60 {
        let trial = theta + dir * t;
        let (v, g) = f(&trial);
        if v.is_finite() && g.iter().all(|x| x.is_finite()) {
            if v >= value + 1e-4 * t * slope {
                return Some((t, v, g));
            }
            if (v - value).abs() <= noise && max_abs(&g) < g0 {
                return Some((t, v.max(value), g));
            }
        }
        t *= 0.5;
    }
    None
}
