//! Plain-text fit reports.

use std::fmt::Write;

use super::{p_value, stars, BinaryFit, OrderedFit};

fn coef_lines(out: &mut String, names: &[String], beta: &[f64], se: &[f64]) {
    let _ = writeln!(out, "{:<28}{:>12}{:>12}{:>10}{:>10}", "term", "coef", "se", "z", "p");
    for ((n, b), s) in names.iter().zip(beta).zip(se) {
        let z = b / s;
        let p = p_value(z);
        let _ = writeln!(out, "{n:<28}{b:>12.6}{s:>12.6}{z:>10.3}{p:>10.4} {}", stars(p));
    }
}

pub fn ordered_report(fit: &OrderedFit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model: ordered probit");
    let _ = writeln!(out, "converged: {}", fit.converged);
    coef_lines(&mut out, &fit.names, &fit.beta, &fit.se());
    let cut_names: Vec<String> = (1..=fit.cutpoints.len()).map(|m| format!("cut{m}")).collect();
    coef_lines(&mut out, &cut_names, &fit.cutpoints, &fit.cutpoint_se());
    footer(&mut out, fit.loglik, fit.aic, fit.bic, fit.n, fit.n_clusters, &fit.warnings);
    out
}

pub fn binary_report(fit: &BinaryFit) -> String {
    let mut out = String::new();
    let model = match fit.sigma_u {
        Some(_) => "random-intercept probit",
        None => "probit",
    };
    let _ = writeln!(out, "model: {model}");
    let _ = writeln!(out, "converged: {}", fit.converged);
    coef_lines(&mut out, &fit.names, &fit.beta, &fit.se());
    if let Some(s) = fit.sigma_u {
        let _ = writeln!(out, "sigma_u: {s:.6}");
        if let Some(g) = &fit.group_label {
            let _ = writeln!(out, "group: {g}");
        }
    }
    footer(&mut out, fit.loglik, fit.aic, fit.bic, fit.n, fit.n_clusters, &fit.warnings);
    out
}

fn footer(out: &mut String, ll: f64, aic: f64, bic: f64, n: usize, g: usize, warnings: &[String]) {
    let _ = writeln!(out, "loglik: {ll:.4}");
    let _ = writeln!(out, "aic: {aic:.4}");
    let _ = writeln!(out, "bic: {bic:.4}");
    let _ = writeln!(out, "observations: {n}");
    let _ = writeln!(out, "clusters: {g}");
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
}
