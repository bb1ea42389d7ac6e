//! Plain-text and CSV report emitters: descriptives, on-time vs delayed
//! means, side-by-side fit tables and the SMOTE share study.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::estimate::{select_and_fit, Estimate, EstimationOptions};
use crate::features::{DesignMatrix, FeatureTable, TABLE1_VARIABLES};
use crate::probit::{p_value, stars, OrderedFit};
use crate::resample::{smote_oversample, target_count, SmoteConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveRow {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a constant column.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure3Row {
    pub group: String,
    pub on_time_mean: Option<f64>,
    pub delayed_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptives {
    pub rows: Vec<DescriptiveRow>,
    pub figure3: Vec<Figure3Row>,
}

fn moments(variable: &str, v: &[f64]) -> DescriptiveRow {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n.max(1) as f64;
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    DescriptiveRow { variable: variable.to_string(), n, mean, sd, min, max }
}

/// Per-variable moments in the descriptive table's row order, and mean
/// satisfaction of on-time and delayed passengers by respondent group.
pub fn emit_descriptives(table: &FeatureTable) -> Result<Descriptives> {
    let mut rows = Vec::with_capacity(TABLE1_VARIABLES.len());
    for name in TABLE1_VARIABLES {
        rows.push(moments(name, table.column(name)?));
    }
    Ok(Descriptives { rows, figure3: figure3(table)? })
}

fn figure3(table: &FeatureTable) -> Result<Vec<Figure3Row>> {
    let n = table.nrows();
    let del = table.column("DEL")?;
    let mut groups: Vec<(String, Vec<bool>)> = Vec::new();
    let dummy = |name: &str| -> Result<Vec<bool>> { Ok(table.column(name)?.iter().map(|v| *v == 1.0).collect()) };
    let blocks: [(&str, &[&str]); 3] = [
        ("generation", &["GENSILEN", "GENBOOM", "GENX", "GENMILLEN", "GENZ"]),
        ("schooling", &["SCHLELEM", "SCHLMIDD", "SCHLHIGH", "SCHLCOLL"]),
        ("trip frequency", &["FIRSTTFLIER", "EXPERCDFLIER", "FREQFLIER"]),
    ];
    for (label, names) in blocks {
        for name in names {
            groups.push((format!("{label}: {name}"), dummy(name)?));
        }
    }
    for (label, col) in [("restaurants", "FOOD (4/5 RATING)"), ("shops", "SHOPS (4/5 RATING)")] {
        let d = dummy(col)?;
        groups.push((format!("{label}: satisfied"), d.clone()));
        groups.push((format!("{label}: not satisfied"), d.iter().map(|b| !b).collect()));
    }
    let t1 = dummy("SMALLTERM")?;
    let t3 = dummy("INTNLTERM")?;
    groups.push(("terminal: T1".into(), t1.clone()));
    groups.push(("terminal: T2".into(), (0..n).map(|i| !t1[i] && !t3[i]).collect()));
    groups.push(("terminal: T3".into(), t3));
    let intl = dummy("INTNLDEST")?;
    groups.push(("destination: domestic".into(), intl.iter().map(|b| !b).collect()));
    groups.push(("destination: international".into(), intl));
    let (wo, wd) = (dummy("WEATHER (ORG)")?, dummy("WEATHER (DST)")?);
    let adverse: Vec<bool> = (0..n).map(|i| wo[i] || wd[i]).collect();
    groups.push(("weather: adverse".into(), adverse.clone()));
    groups.push(("weather: clear".into(), adverse.iter().map(|b| !b).collect()));
    let bins = &table.spec.time_to_flight;
    for b in 0..bins.n_bins() {
        groups.push((
            format!("time to departure: {}", bins.label(b)),
            table.ttf_bin.iter().map(|&x| x == b).collect(),
        ));
    }

    let mean = |mask: &[bool], delayed: bool| -> Option<f64> {
        let (s, c) = (0..n)
            .filter(|&i| mask[i] && (del[i] == 1.0) == delayed)
            .fold((0.0, 0usize), |(s, c), i| (s + table.aptsat[i] as f64, c + 1));
        (c > 0).then(|| s / c as f64)
    };
    Ok(groups
        .into_iter()
        .map(|(group, mask)| Figure3Row {
            on_time_mean: mean(&mask, false),
            delayed_mean: mean(&mask, true),
            group,
        })
        .collect())
}

impl Descriptives {
    pub fn write_table1(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["variable", "n", "mean", "sd", "min", "max"])?;
        for r in &self.rows {
            w.write_record([
                r.variable.clone(),
                r.n.to_string(),
                format!("{:.4}", r.mean),
                format!("{:.4}", r.sd),
                format!("{:.4}", r.min),
                format!("{:.4}", r.max),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_figure3(&self, path: &Path) -> Result<()> {
        let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |m| format!("{m:.4}"));
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["group", "on_time_mean", "delayed_mean"])?;
        for r in &self.figure3 {
            w.write_record([r.group.clone(), cell(r.on_time_mean), cell(r.delayed_mean)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed-effect style blocks summarized as yes/no rows.
const FE_BLOCKS: [(&str, &str); 4] = [
    ("TIMETOFLT", "time-to-flight bins"),
    ("DEST=", "destination effects"),
    ("AIRL=", "airline effects"),
    ("DATE=", "date effects"),
];

fn fe_block(name: &str) -> Option<usize> {
    FE_BLOCKS.iter().position(|(p, _)| name.starts_with(p))
}

/// One column of a side-by-side fit table.
#[derive(Debug, Clone)]
pub struct FitColumn<'a> {
    pub label: String,
    pub fit: &'a OrderedFit,
    /// Penalized candidates eliminated by selection.
    pub lasso_dropped: Vec<String>,
    pub estimator: String,
    pub cluster_label: String,
}

impl<'a> FitColumn<'a> {
    pub fn from_estimate(label: &str, e: &'a Estimate) -> Self {
        Self {
            label: label.to_string(),
            fit: &e.fit,
            lasso_dropped: e.lasso_dropped.clone(),
            estimator: "ordered probit (PDS-LASSO)".into(),
            cluster_label: "terminal x date".into(),
        }
    }
}

/// Coefficient rows with stars and standard errors, "(lasso drop)" cells,
/// fixed-effect yes/no rows and fit statistics.
pub fn emit_fit_table(columns: &[FitColumn<'_>]) -> Result<String> {
    if columns.is_empty() {
        return Err(Error::Contract("fit table needs at least one fit".into()));
    }
    let mut rows: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in columns {
        for n in c.fit.names.iter().chain(&c.lasso_dropped) {
            if fe_block(n).is_none() && seen.insert(n.clone()) {
                rows.push(n.clone());
            }
        }
    }
    let w0 = rows.iter().map(|r| r.len()).max().unwrap_or(0).max(22) + 2;
    let w = columns.iter().map(|c| c.label.len()).max().unwrap_or(0).max(14) + 2;
    let mut out = String::new();
    let line = |out: &mut String, head: &str, cells: &[String]| {
        let _ = write!(out, "{head:<w0$}");
        for c in cells {
            let _ = write!(out, "{c:>w$}");
        }
        out.push('\n');
    };
    line(&mut out, "", &columns.iter().map(|c| c.label.clone()).collect::<Vec<_>>());
    for name in &rows {
        let mut coef = Vec::new();
        let mut se = Vec::new();
        for c in columns {
            if let Some(j) = c.fit.names.iter().position(|n| n == name) {
                let s = c.fit.se()[j];
                let b = c.fit.beta[j];
                coef.push(format!("{b:.4}{}", stars(p_value(b / s))));
                se.push(format!("({s:.4})"));
            } else if c.lasso_dropped.contains(name) {
                coef.push("(lasso drop)".into());
                se.push(String::new());
            } else {
                coef.push(String::new());
                se.push(String::new());
            }
        }
        line(&mut out, name, &coef);
        line(&mut out, "", &se);
    }
    for (k, (_, label)) in FE_BLOCKS.iter().enumerate() {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| {
                let selected = c.fit.names.iter().any(|n| fe_block(n) == Some(k));
                let offered = c.lasso_dropped.iter().any(|n| fe_block(n) == Some(k));
                match (selected, offered) {
                    (true, _) => "yes".into(),
                    (false, true) => "(lasso drop)".into(),
                    (false, false) => "no".into(),
                }
            })
            .collect();
        line(&mut out, label, &cells);
    }
    let stat = |f: &dyn Fn(&FitColumn<'_>) -> String| columns.iter().map(f).collect::<Vec<_>>();
    line(&mut out, "estimator", &stat(&|c| c.estimator.clone()));
    line(&mut out, "clusters", &stat(&|c| format!("{} ({})", c.cluster_label, c.fit.n_clusters)));
    line(&mut out, "log-likelihood", &stat(&|c| format!("{:.2}", c.fit.loglik)));
    line(&mut out, "AIC", &stat(&|c| format!("{:.2}", c.fit.aic)));
    line(&mut out, "BIC", &stat(&|c| format!("{:.2}", c.fit.bic)));
    line(&mut out, "observations", &stat(&|c| c.fit.n.to_string()));
    out.push_str("significance: *** p < 0.01, ** p < 0.05, * p < 0.10; cluster-robust standard errors in parentheses\n");
    Ok(out)
}

/// Minority sizes and replicated delay coefficients per target share.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteStudy {
    pub column: String,
    pub shares: Vec<f64>,
    pub replications: usize,
    pub minority_sizes: Vec<usize>,
    /// Coefficient per share and replication.
    pub estimates: Vec<Vec<f64>>,
}

impl SmoteStudy {
    pub fn means(&self) -> Vec<f64> {
        self.estimates.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect()
    }

    /// Standard deviation over replications; absent with one replication.
    pub fn ses(&self) -> Option<Vec<f64>> {
        (self.replications > 1).then(|| {
            self.estimates
                .iter()
                .map(|v| {
                    let m = v.iter().sum::<f64>() / v.len() as f64;
                    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
                })
                .collect()
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let ses = self.ses();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["share".to_string(), "minority_size".into(), format!("mean_{}", self.column)];
        if ses.is_some() {
            header.push(format!("se_{}", self.column));
        }
        w.write_record(&header)?;
        for (i, m) in self.means().iter().enumerate() {
            let mut rec = vec![self.shares[i].to_string(), self.minority_sizes[i].to_string(), format!("{m:.6}")];
            if let Some(s) = &ses {
                rec.push(format!("{:.6}", s[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Whether |mean coefficient| increases with the share at every step.
    pub fn magnitude_rising(&self) -> bool {
        self.means().windows(2).all(|w| w[1].abs() > w[0].abs())
    }
}

/// Oversamples to each share `replications` times (seed, seed + 1, ...),
/// refits, and collects the coefficient on `column`.
pub fn emit_smote_study(
    matrix: &DesignMatrix,
    shares: &[f64],
    replications: usize,
    base: &SmoteConfig,
    options: &EstimationOptions,
    column: &str,
) -> Result<SmoteStudy> {
    if replications == 0 {
        return Err(Error::Config("replications must be positive".into()));
    }
    let flag = matrix
        .aux
        .get(&base.minority_flag)
        .map(|v| v.to_vec())
        .or_else(|| matrix.values(&base.minority_flag).ok())
        .ok_or_else(|| Error::MissingColumn(base.minority_flag.clone()))?;
    let n_min = flag.iter().filter(|v| **v == 1.0).count();
    let n_maj = flag.len() - n_min;
    let minority_sizes = shares
        .iter()
        .map(|&s| target_count(n_maj, n_min, s))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..shares.len()).flat_map(|i| (0..replications).map(move |r| (i, r))).collect();
    let coefs = jobs
        .par_iter()
        .map(|&(i, r)| {
            let cfg = SmoteConfig { target_share: shares[i], seed: base.seed + r as u64, ..base.clone() };
            let (m, _) = smote_oversample(matrix, &cfg)?;
            let est = select_and_fit(&m, options)?;
            est.coef(column)
                .map(|(b, _)| b)
                .ok_or_else(|| Error::MissingColumn(column.to_string()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let estimates = coefs.chunks(replications).map(|c| c.to_vec()).collect();
    Ok(SmoteStudy {
        column: column.to_string(),
        shares: shares.to_vec(),
        replications,
        minority_sizes,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn fit(names: &[&str], beta: &[f64], se: &[f64]) -> OrderedFit {
        let k = names.len();
        OrderedFit {
            names: names.iter().map(|s| s.to_string()).collect(),
            beta: beta.to_vec(),
            cutpoints: vec![0.0, 1.0],
            loglik: -100.0,
            vcov: DMatrix::from_fn(k + 2, k + 2, |i, j| if i == j && i < k { se[i] * se[i] } else if i == j { 1.0 } else { 0.0 }),
            converged: true,
            n: 50,
            k,
            aic: 210.0,
            bic: 220.0,
            iterations: 1,
            grad_max_norm: 0.0,
            categories: vec![1, 2, 3],
            n_clusters: 5,
            warnings: Vec::new(),
            trace: Vec::new(),
        }
    }

    #[test]
    fn fit_table_cells() {
        // z = 2.054 → p ≈ 0.04
        let f = fit(&["DEL (INT)", "DEST=GRU"], &[-0.2054, 0.1], &[0.1, 0.1]);
        let col = FitColumn {
            label: "(6)".into(),
            fit: &f,
            lasso_dropped: vec!["DEL (EXT)".into(), "AIRL=X".into()],
            estimator: "ordered probit".into(),
            cluster_label: "terminal x date".into(),
        };
        let t = emit_fit_table(&[col]).unwrap();
        assert!(t.contains("-0.2054**"), "{t}");
        let ext = t.lines().find(|l| l.starts_with("DEL (EXT)")).unwrap();
        assert!(ext.ends_with("(lasso drop)"));
        assert!(t.lines().any(|l| l.starts_with("destination effects") && l.ends_with("yes")));
        assert!(t.lines().any(|l| l.starts_with("airline effects") && l.ends_with("(lasso drop)")));
        assert!(t.lines().any(|l| l.starts_with("date effects") && l.ends_with("no")));
        assert!(!t.contains("DEST=GRU"));
        assert!(t.contains("AIC") && t.contains("BIC") && t.contains("log-likelihood"));
    }

    #[test]
    fn empty_fit_table_is_an_error() {
        assert!(emit_fit_table(&[]).is_err());
    }

    #[test]
    fn constant_column_has_zero_sd() {
        let r = moments("X", &[2.0; 5]);
        assert_eq!(r.sd, 0.0);
        assert_eq!((r.min, r.max, r.mean), (2.0, 2.0, 2.0));
    }

    #[test]
    fn study_se_absent_with_one_replication() {
        let s = SmoteStudy {
            column: "DEL".into(),
            shares: vec![0.4],
            replications: 1,
            minority_sizes: vec![10],
            estimates: vec![vec![-0.1]],
        };
        assert!(s.ses().is_none());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t3.csv");
        s.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), "share,minority_size,mean_DEL");
    }
}
