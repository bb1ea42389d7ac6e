//! SMOTE oversampling of the minority class (business travelers).
//!
//! Each synthetic row interpolates between a minority base row and its
//! nearest minority neighbor: `base + u·(neighbor − base)` with one
//! `u ~ U(0, 1)` per synthetic row, so every synthetic row lies on the
//! segment joining two original minority rows.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::DesignMatrix;
use crate::{Error, Result};

/// How a synthetic row's ordinal outcome is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutcomeRule {
    /// Copy the base row's outcome.
    #[default]
    CopyBase,
    /// Interpolate with the same `u` and round to the nearest category.
    RoundedInterpolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteConfig {
    /// 0/1 column (regressor or auxiliary) marking the minority class.
    pub minority_flag: String,
    pub target_share: f64,
    pub k_neighbors: usize,
    pub seed: u64,
    /// Distance space; empty means every regressor column.
    pub feature_columns: Vec<String>,
    pub outcome_rule: OutcomeRule,
    /// Round interpolated 0/1 columns back to 0/1.
    pub rebinarize: bool,
    /// Scale each feature column to unit standard deviation before
    /// computing distances.
    pub standardize: bool,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            minority_flag: "BSNFLIER".into(),
            target_share: 0.40,
            k_neighbors: 1,
            seed: 2022,
            feature_columns: Vec::new(),
            outcome_rule: OutcomeRule::CopyBase,
            rebinarize: false,
            standardize: false,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_share > 0.0 && self.target_share < 1.0) {
            return Err(Error::Config(format!("target_share must lie in (0, 1), got {}", self.target_share)));
        }
        if self.k_neighbors == 0 {
            return Err(Error::Config("k_neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

/// Minority total after oversampling: `floor(n_majority · s / (1 − s))`.
/// A target equal to the current share returns `n_minority`; a lower
/// target is an error.
pub fn target_count(n_majority: usize, n_minority: usize, target_share: f64) -> Result<usize> {
    if !(target_share > 0.0 && target_share < 1.0) {
        return Err(Error::Config(format!("target_share must lie in (0, 1), got {target_share}")));
    }
    let total = (n_majority + n_minority) as f64;
    let current = n_minority as f64 / total;
    if target_share < current - 1e-12 {
        return Err(Error::Config(format!(
            "target_share {target_share} is below the current minority share {current:.6}"
        )));
    }
    let raw = n_majority as f64 * target_share / (1.0 - target_share);
    let count = (raw + 1e-9).floor() as usize;
    Ok(count.max(n_minority))
}

/// Summary of one oversampling run.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteSummary {
    pub n_majority: usize,
    pub n_minority: usize,
    pub minority_target: usize,
    pub n_synthetic: usize,
}

fn minority_mask(matrix: &DesignMatrix, flag: &str) -> Result<Vec<bool>> {
    let v = matrix.values(flag)?;
    v.iter()
        .map(|&x| {
            if x == 1.0 {
                Ok(true)
            } else if x == 0.0 {
                Ok(false)
            } else {
                Err(Error::Data(format!("minority flag `{flag}` has non-binary value {x}")))
            }
        })
        .collect()
}

/// Nearest other minority row for each of the first `needed` minority rows
/// (positions into `pts`), ties by lowest index.
fn nearest_neighbors(pts: &DMatrix<f64>, needed: usize) -> Vec<usize> {
    let m = pts.nrows();
    (0..needed)
        .into_par_iter()
        .map(|a| {
            let mut best = (f64::INFINITY, usize::MAX);
            for b in 0..m {
                if b == a {
                    continue;
                }
                let mut d = 0.0;
                for j in 0..pts.ncols() {
                    let t = pts[(a, j)] - pts[(b, j)];
                    d += t * t;
                }
                if d < best.0 {
                    best = (d, b);
                }
            }
            best.1
        })
        .collect()
}

/// Appends synthetic minority rows until the minority share reaches the
/// target. Majority and original minority rows pass through unchanged.
pub fn smote_oversample(matrix: &DesignMatrix, cfg: &SmoteConfig) -> Result<(DesignMatrix, SmoteSummary)> {
    cfg.validate()?;
    let mask = minority_mask(matrix, &cfg.minority_flag)?;
    let minority: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let n_minority = minority.len();
    let n_majority = mask.len() - n_minority;
    let target = target_count(n_majority, n_minority, cfg.target_share)?;
    let n_synthetic = target - n_minority;
    let summary = SmoteSummary { n_majority, n_minority, minority_target: target, n_synthetic };
    if n_synthetic == 0 {
        return Ok((matrix.clone(), summary));
    }
    if n_minority < 2 {
        return Err(Error::Data(format!("SMOTE needs at least 2 minority rows, found {n_minority}")));
    }

    let feature_cols: Vec<String> = if cfg.feature_columns.is_empty() {
        matrix.names.clone()
    } else {
        cfg.feature_columns.clone()
    };
    let feature_vals: Vec<Vec<f64>> = feature_cols.iter().map(|c| matrix.values(c)).collect::<Result<_>>()?;
    for (c, v) in feature_cols.iter().zip(&feature_vals) {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data(format!("feature column `{c}` has non-numeric values")));
        }
    }
    let scales: Vec<f64> = feature_vals
        .iter()
        .map(|v| {
            if !cfg.standardize {
                return 1.0;
            }
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 { 1.0 / sd } else { 1.0 }
        })
        .collect();
    let pts = DMatrix::from_fn(n_minority, feature_cols.len(), |a, j| feature_vals[j][minority[a]] * scales[j]);
    let needed = n_synthetic.min(n_minority);
    let neighbors = nearest_neighbors(&pts, needed);

    // Base rows cycle through the minority rows; draws follow base order.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plan: Vec<(usize, usize, f64)> = (0..n_synthetic)
        .map(|k| {
            let a = k % n_minority;
            let u: f64 = rng.random();
            (minority[a], minority[neighbors[a]], u)
        })
        .collect();

    let n = matrix.nrows();
    let p = matrix.ncols();
    let interp_cols: Vec<bool> = matrix.names.iter().map(|c| feature_cols.contains(c)).collect();
    let binary_cols: Vec<bool> = (0..p)
        .map(|j| matrix.x.column(j).iter().all(|v| *v == 0.0 || *v == 1.0))
        .collect();
    let flag_col = matrix.column_index(&cfg.minority_flag).ok();

    let mut x = matrix.x.clone().resize_vertically(n + n_synthetic, 0.0);
    let mut out = matrix.clone();
    for (k, &(base, nb, u)) in plan.iter().enumerate() {
        let row = n + k;
        for j in 0..p {
            let (a, b) = (matrix.x[(base, j)], matrix.x[(nb, j)]);
            let mut v = if interp_cols[j] { a + u * (b - a) } else { a };
            if cfg.rebinarize && binary_cols[j] {
                v = if v >= 0.5 { 1.0 } else { 0.0 };
            }
            x[(row, j)] = v;
        }
        if let Some(j) = flag_col {
            x[(row, j)] = 1.0;
        }
        let y = match cfg.outcome_rule {
            OutcomeRule::CopyBase => matrix.y[base],
            OutcomeRule::RoundedInterpolation => {
                let (a, b) = (matrix.y[base] as f64, matrix.y[nb] as f64);
                (a + u * (b - a)).round() as i64
            }
        };
        out.y.push(y);
        out.row_ids.push(format!("{}~smote{}", matrix.row_ids[base], k + 1));
        out.cluster_id.push(matrix.cluster_id[base].clone());
        out.synthetic.push(true);
        for (name, v) in out.aux.iter_mut() {
            let val = if *name == cfg.minority_flag {
                1.0
            } else if let Some(i) = feature_cols.iter().position(|c| c == name) {
                let (a, b) = (feature_vals[i][base], feature_vals[i][nb]);
                a + u * (b - a)
            } else {
                v[base]
            };
            v.push(val);
        }
    }
    out.x = x;
    out.notes.push(format!(
        "SMOTE: {n_synthetic} synthetic minority rows (target share {}, seed {})",
        cfg.target_share, cfg.seed
    ));
    Ok((out, summary))
}
