//! Two-step delay attribution: a (random-intercept) probit for the delay
//! indicator, then a split of each row's predicted delay probability into
//! an internal component (weather at its no-adverse reference) and the
//! weather increment.

use std::collections::BTreeMap;

use crate::features::{DesignMatrix, FeatureTable};
use crate::probit::normal;
use crate::probit::{fit_binary_probit, fit_random_intercept_probit, BinaryFit, BinaryOptions, RandomInterceptOptions};
use crate::{Error, Result};

/// Delay-stage covariates, in column order.
pub const DELAY_ROSTER: [&str; 19] = [
    "WEATHER (ORG)",
    "WEATHER (DST)",
    "SMALLTERM",
    "INTNLTERM",
    "JETBRIDGE",
    "PRCONNECT",
    "LOADFAC",
    "AIRCSIZE",
    "CARGO",
    "DISTANCE",
    "BUSYDAY",
    "BUSYHOUR",
    "SECINSPTIME",
    "RUNWAYCONG",
    "RUNWAYDIS",
    "CASCAD (DEP)",
    "CASCAD (ARR)",
    "PANDEMIC (EARLY)",
    "PANDEMIC (LATER)",
];

/// Weather-driven covariates; everything else in the roster is internal.
pub const EXTERNAL: [&str; 2] = ["WEATHER (ORG)", "WEATHER (DST)"];

pub const DEL_INT: &str = "DEL (INT)";
pub const DEL_EXT: &str = "DEL (EXT)";

/// Published delay-stage coefficients (no intercept reported).
pub const TABLE5_COEFFICIENTS: [(&str, f64); 19] = [
    ("WEATHER (ORG)", 0.0290),
    ("WEATHER (DST)", 0.1347),
    ("SMALLTERM", 1.5836),
    ("INTNLTERM", 0.7622),
    ("JETBRIDGE", -0.0269),
    ("PRCONNECT", -0.1283),
    ("LOADFAC", 0.2697),
    ("AIRCSIZE", -0.0019),
    ("CARGO", 0.0552),
    ("DISTANCE", -0.0296),
    ("BUSYDAY", 0.2419),
    ("BUSYHOUR", 0.0615),
    ("SECINSPTIME", 0.1136),
    ("RUNWAYCONG", 0.3785),
    ("RUNWAYDIS", 1.7516),
    ("CASCAD (DEP)", -0.0234),
    ("CASCAD (ARR)", 2.0114),
    ("PANDEMIC (EARLY)", -0.0698),
    ("PANDEMIC (LATER)", 0.3113),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Internal,
    External,
}

impl Origin {
    pub fn of(column: &str) -> Self {
        if EXTERNAL.contains(&column) {
            Origin::External
        } else {
            Origin::Internal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayEstimator {
    #[default]
    RandomIntercept,
    Pooled,
}

/// Random-intercept predictions at the group effect's mean, or
/// integrated over it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictionScale {
    #[default]
    Conditional,
    Marginal,
}

#[derive(Debug, Clone, Default)]
pub struct DelayStageOptions {
    pub estimator: DelayEstimator,
    pub random_intercept: RandomInterceptOptions,
    pub binary: BinaryOptions,
}

/// Delay-stage coefficients with each covariate tagged by origin.
#[derive(Debug, Clone)]
pub struct DelayStageFit {
    pub intercept: f64,
    /// Covariates actually in the model (constant columns dropped).
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub origins: Vec<Origin>,
    pub sigma_u: Option<f64>,
    /// The underlying fit; absent for published coefficients.
    pub fit: Option<BinaryFit>,
    pub notes: Vec<String>,
}

impl DelayStageFit {
    fn from_parts(intercept: f64, coefs: Vec<(String, f64)>, sigma_u: Option<f64>, fit: Option<BinaryFit>) -> Self {
        let origins = coefs.iter().map(|(n, _)| Origin::of(n)).collect();
        let (names, beta) = coefs.into_iter().unzip();
        Self { intercept, names, beta, origins, sigma_u, fit, notes: Vec::new() }
    }

    /// Published coefficients with a caller-supplied intercept.
    pub fn table5(intercept: f64) -> Self {
        let coefs = TABLE5_COEFFICIENTS.iter().map(|(n, b)| (n.to_string(), *b)).collect();
        let mut s = Self::from_parts(intercept, coefs, None, None);
        s.notes.push("published coefficients; no fit performed".into());
        s
    }

    /// Arbitrary coefficients, for what-if decompositions.
    pub fn from_coefficients(intercept: f64, coefs: &[(&str, f64)]) -> Self {
        Self::from_parts(intercept, coefs.iter().map(|(n, b)| (n.to_string(), *b)).collect(), None, None)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|j| self.beta[j])
    }
}

/// Binary delay design (`DEL` on [`DELAY_ROSTER`]) from a feature table.
pub fn delay_design(table: &FeatureTable) -> Result<DesignMatrix> {
    for c in DELAY_ROSTER {
        table.column(c).map_err(|_| Error::MissingColumn(c.to_string()))?;
    }
    table.binary_design("DEL", &DELAY_ROSTER)
}

/// Fits the delay stage on a binary matrix whose columns include every
/// [`DELAY_ROSTER`] covariate that varies in the sample.
pub fn fit_delay_stage(matrix: &DesignMatrix, options: &DelayStageOptions) -> Result<DelayStageFit> {
    let dropped: Vec<&str> = DELAY_ROSTER
        .iter()
        .copied()
        .filter(|c| !matrix.has_column(c))
        .collect();
    for c in &dropped {
        let was_constant = matrix.notes.iter().any(|n| n.contains(&format!("`{c}`")));
        if !was_constant {
            return Err(Error::MissingColumn(c.to_string()));
        }
    }
    let roster: Vec<String> = DELAY_ROSTER
        .iter()
        .filter(|c| matrix.has_column(c))
        .map(|c| c.to_string())
        .collect();
    let m = matrix.select(&roster)?;
    let fit = match options.estimator {
        DelayEstimator::RandomIntercept => fit_random_intercept_probit(&m, &m.cluster_id, &options.random_intercept)?,
        DelayEstimator::Pooled => fit_binary_probit(&m, &options.binary)?,
    };
    let coefs = fit.names[1..].iter().cloned().zip(fit.beta[1..].iter().copied()).collect();
    let mut out = DelayStageFit::from_parts(fit.intercept(), coefs, fit.sigma_u, Some(fit));
    out.notes.extend(m.notes.iter().cloned());
    if EXTERNAL.iter().all(|c| dropped.contains(c)) {
        out.notes.push("no weather variation in sample; delay stage is internal-only".into());
    }
    Ok(out)
}

/// Per-row split of the predicted delay probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub row_ids: Vec<String>,
    pub eta_int: Vec<f64>,
    pub eta_ext: Vec<f64>,
    pub del_int: Vec<f64>,
    pub del_ext: Vec<f64>,
    /// Rows whose weather increment was negative and floored at 0.
    pub n_floored: usize,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.del_int.len()
    }

    pub fn is_empty(&self) -> bool {
        self.del_int.is_empty()
    }

    /// `row_id,del_int,del_ext,eta_int,eta_ext`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["row_id", "del_int", "del_ext", "eta_int", "eta_ext"])?;
        for i in 0..self.len() {
            w.write_record([
                self.row_ids[i].clone(),
                self.del_int[i].to_string(),
                self.del_ext[i].to_string(),
                self.eta_int[i].to_string(),
                self.eta_ext[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `del_int = Φ(α + η_int)`, `del_ext = max(Φ(α + η_int + η_ext) − del_int, 0)`,
/// with `η_int` including the intercept. Under [`PredictionScale::Marginal`]
/// both indices are divided by `√(1 + σ_u²)`.
pub fn decompose_predictions(fit: &DelayStageFit, rows: &DesignMatrix, scale: PredictionScale) -> Result<Decomposition> {
    let n = rows.nrows();
    let mut eta_int = vec![fit.intercept; n];
    let mut eta_ext = vec![0.0; n];
    for ((name, b), origin) in fit.names.iter().zip(&fit.beta).zip(&fit.origins) {
        let v = rows.values(name)?;
        let target = match origin {
            Origin::Internal => &mut eta_int,
            Origin::External => &mut eta_ext,
        };
        for (t, x) in target.iter_mut().zip(&v) {
            *t += b * x;
        }
    }
    let s = match (scale, fit.sigma_u) {
        (PredictionScale::Marginal, Some(sig)) => (1.0 + sig * sig).sqrt(),
        _ => 1.0,
    };
    let mut n_floored = 0;
    let mut del_int = Vec::with_capacity(n);
    let mut del_ext = Vec::with_capacity(n);
    for i in 0..n {
        let pi = normal::cdf(eta_int[i] / s);
        let inc = if eta_ext[i] == 0.0 { 0.0 } else { normal::cdf((eta_int[i] + eta_ext[i]) / s) - pi };
        if inc < 0.0 {
            n_floored += 1;
        }
        del_int.push(pi);
        del_ext.push(inc.max(0.0));
    }
    Ok(Decomposition { row_ids: rows.row_ids.clone(), eta_int, eta_ext, del_int, del_ext, n_floored })
}

/// Replaces `DEL` with penalized `DEL (INT)` and `DEL (EXT)` columns. A
/// constant component is left out with a note.
pub fn plug_into_satisfaction(decomp: &Decomposition, base: &DesignMatrix) -> Result<DesignMatrix> {
    if decomp.len() != base.nrows() || decomp.row_ids != base.row_ids {
        return Err(Error::Contract("decomposition rows do not match the satisfaction matrix".into()));
    }
    let mut m = if base.has_column("DEL") {
        base.drop_columns(&["DEL".to_string()])?
    } else {
        base.clone()
    };
    for (name, v) in [(DEL_INT, &decomp.del_int), (DEL_EXT, &decomp.del_ext)] {
        if v.iter().all(|x| *x == v[0]) {
            m.notes.push(format!("dropped constant column `{name}` (value {})", v[0]));
        } else {
            m.push_column(name, v, true)?;
        }
    }
    Ok(m)
}

/// Counts of rows per origin share, for reporting.
pub fn decomposition_summary(d: &Decomposition) -> BTreeMap<&'static str, f64> {
    let n = d.len().max(1) as f64;
    let mut s = BTreeMap::new();
    s.insert("mean_del_int", d.del_int.iter().sum::<f64>() / n);
    s.insert("mean_del_ext", d.del_ext.iter().sum::<f64>() / n);
    s.insert("share_weather_rows", d.eta_ext.iter().filter(|e| **e != 0.0).count() as f64 / n);
    s.insert("n_floored", d.n_floored as f64);
    s
}
