//! Gauss–Hermite rules for `∫ e^{−t²} f(t) dt`.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Hermite rule (physicists'
/// weight `e^{−t²}`), computed with the Golub–Welsch eigenvalue method.
/// Nodes are ascending and the weights sum to `√π`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = off;
        jacobi[(k - 1, k)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize against round-off.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-t, w);
        pairs[j] = (t, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Same rule with weights divided by `√π`, so that
/// `E[f(Z)] ≈ Σ w_m f(√2 t_m)` for `Z ~ N(0, 1)`.
pub fn normalized_gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_hermite(n);
    let s: f64 = PI.sqrt();
    (t, w.into_iter().map(|x| x / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_rule_matches_closed_form() {
        let (t, w) = gauss_hermite(3);
        let r = (1.5_f64).sqrt();
        assert!((t[0] + r).abs() < 1e-14 && t[1] == 0.0 && (t[2] - r).abs() < 1e-14);
        assert!((w[1] - 2.0 * PI.sqrt() / 3.0).abs() < 1e-14);
        assert!((w[0] - PI.sqrt() / 6.0).abs() < 1e-14);
    }

    #[test]
    fn integrates_normal_moments() {
        let (t, w) = normalized_gauss_hermite(12);
        let moment = |k: i32| -> f64 {
            t.iter()
                .zip(&w)
                .map(|(ti, wi)| wi * (2f64.sqrt() * ti).powi(k))
                .sum()
        };
        assert!((moment(0) - 1.0).abs() < 1e-13);
        assert!((moment(2) - 1.0).abs() < 1e-12);
        assert!((moment(4) - 3.0).abs() < 1e-11);
        assert!((moment(10) - 945.0).abs() < 1e-8);
    }
}
