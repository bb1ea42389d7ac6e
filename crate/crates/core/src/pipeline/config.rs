//! Pipeline configuration: one TOML file, every section optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Variant;
use crate::attribution::{DelayEstimator, DelayStageOptions, PredictionScale};
use crate::data::SyntheticConfig;
use crate::estimate::EstimationOptions;
use crate::features::FeatureSpec;
use crate::lasso::PdsOptions;
use crate::probit::{OptimOptions, RandomInterceptOptions};
use crate::resample::{OutcomeRule, SmoteConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub variant: Variant,
    pub seed: u64,
    /// Output root; not part of the configuration hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; not part of the configuration hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub data: DataSection,
    pub features: FeatureSection,
    pub smote: SmoteSection,
    pub lasso: LassoSection,
    pub fit: FitSection,
    pub attribution: AttributionSection,
    pub study: StudySection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::default(),
            seed: 7,
            out_dir: None,
            threads: None,
            data: DataSection::default(),
            features: FeatureSection::default(),
            smote: SmoteSection::default(),
            lasso: LassoSection::default(),
            fit: FitSection::default(),
            attribution: AttributionSection::default(),
            study: StudySection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Synthesize tables into `<out>/data`, then ingest them.
    #[default]
    Generate,
    /// Read the four tables from `input_dir`.
    Ingest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Flagship,
    AttributionMirror,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_dir: Option<PathBuf>,
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_respondents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_effect_true: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confound_strength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trait_loading: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contamination: Option<f64>,
}

/// Overrides of the variant's feature definitions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_threshold_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub board_quantile: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeRuleName {
    #[default]
    CopyBase,
    RoundedInterpolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub minority_flag: String,
    pub target_share: f64,
    pub k_neighbors: usize,
    pub seed: u64,
    pub outcome_rule: OutcomeRuleName,
    pub rebinarize: bool,
    pub standardize: bool,
}

impl Default for SmoteSection {
    fn default() -> Self {
        let d = SmoteConfig::default();
        Self {
            minority_flag: d.minority_flag,
            target_share: d.target_share,
            k_neighbors: d.k_neighbors,
            seed: d.seed,
            outcome_rule: OutcomeRuleName::default(),
            rebinarize: d.rebinarize,
            standardize: d.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSection {
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for LassoSection {
    fn default() -> Self {
        Self { c: PdsOptions::default().c, gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Iteration cap of the ordered-probit optimizer.
    pub max_iter: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { max_iter: OptimOptions::default().max_iter }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorName {
    #[default]
    RandomIntercept,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleName {
    #[default]
    Conditional,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionSection {
    pub estimator: EstimatorName,
    pub quad_nodes: usize,
    pub scale: ScaleName,
}

impl Default for AttributionSection {
    fn default() -> Self {
        Self {
            estimator: EstimatorName::default(),
            quad_nodes: RandomInterceptOptions::default().quad_nodes,
            scale: ScaleName::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub shares: Vec<f64>,
    pub replications: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        Self { shares: vec![0.35, 0.40, 0.45, 0.50, 0.55], replications: 5 }
    }
}

impl PipelineConfig {
    /// Parses a configuration file, or the `[config]` table of a manifest.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let table = match (table.get("run"), table.get("config")) {
            (Some(_), Some(toml::Value::Table(c))) => c.clone(),
            _ => table,
        };
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::Config(format!("config file not found: {}", path.display())));
        }
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_spec().validate()?;
        self.smote_config().validate()?;
        if self.data.source == DataSource::Ingest && self.data.input_dir.is_none() {
            return Err(Error::Config("data.source = \"ingest\" requires data.input_dir".into()));
        }
        if self.data.source == DataSource::Generate {
            self.synthetic_config().validate()?;
        }
        if !(self.lasso.c > 0.0 && self.lasso.c.is_finite()) {
            return Err(Error::Config(format!("lasso.c must be positive, got {}", self.lasso.c)));
        }
        if let Some(g) = self.lasso.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::Config(format!("lasso.gamma must lie in (0, 1), got {g}")));
            }
        }
        if self.fit.max_iter == 0 {
            return Err(Error::Config("fit.max_iter must be positive".into()));
        }
        if self.attribution.quad_nodes == 0 {
            return Err(Error::Config("attribution.quad_nodes must be positive".into()));
        }
        if self.study.replications == 0 {
            return Err(Error::Config("study.replications must be positive".into()));
        }
        if self.study.shares.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(Error::Config("study.shares must lie in (0, 1)".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        let mut spec = self.variant.feature_spec();
        if let Some(t) = self.features.delay_threshold_min {
            spec.delay_threshold_min = t;
        }
        if let Some(q) = self.features.board_quantile {
            spec.board_quantile = q;
        }
        spec
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        let mut c = match self.data.preset {
            Preset::Flagship => SyntheticConfig::flagship(self.seed),
            Preset::AttributionMirror => SyntheticConfig::attribution_mirror(self.seed),
        };
        let d = &self.data;
        if let Some(v) = d.n_respondents {
            c.n_respondents = v;
        }
        if let Some(v) = d.delay_effect_true {
            c.delay_effect_true = v;
        }
        if let Some(v) = d.confound_strength {
            c.confound_strength = v;
        }
        if let Some(v) = d.trait_loading {
            c.trait_loading = v;
        }
        if let Some(v) = d.contamination {
            c.contamination = v;
        }
        c
    }

    pub fn smote_config(&self) -> SmoteConfig {
        let s = &self.smote;
        SmoteConfig {
            minority_flag: s.minority_flag.clone(),
            target_share: s.target_share,
            k_neighbors: s.k_neighbors,
            seed: s.seed,
            outcome_rule: match s.outcome_rule {
                OutcomeRuleName::CopyBase => OutcomeRule::CopyBase,
                OutcomeRuleName::RoundedInterpolation => OutcomeRule::RoundedInterpolation,
            },
            rebinarize: s.rebinarize,
            standardize: s.standardize,
            ..SmoteConfig::default()
        }
    }

    pub fn estimation_options(&self) -> EstimationOptions {
        let mut opts = EstimationOptions {
            pds: PdsOptions { c: self.lasso.c, gamma: self.lasso.gamma, ..PdsOptions::default() },
            ..EstimationOptions::default()
        };
        opts.ordered.optim.max_iter = self.fit.max_iter;
        opts
    }

    pub fn delay_stage_options(&self) -> DelayStageOptions {
        DelayStageOptions {
            estimator: match self.attribution.estimator {
                EstimatorName::RandomIntercept => DelayEstimator::RandomIntercept,
                EstimatorName::Pooled => DelayEstimator::Pooled,
            },
            random_intercept: RandomInterceptOptions {
                quad_nodes: self.attribution.quad_nodes,
                ..RandomInterceptOptions::default()
            },
            ..DelayStageOptions::default()
        }
    }

    pub fn prediction_scale(&self) -> PredictionScale {
        match self.attribution.scale {
            ScaleName::Conditional => PredictionScale::Conditional,
            ScaleName::Marginal => PredictionScale::Marginal,
        }
    }

    /// The configuration without run-location settings (output directory,
    /// thread count), which do not affect any artifact.
    pub fn canonical(&self) -> Self {
        Self { out_dir: None, threads: None, ..self.clone() }
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.canonical()).expect("configuration serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn parses_sections() {
        let cfg = PipelineConfig::from_toml(
            "variant = \"col3_del30\"\nseed = 11\n[lasso]\nc = 1.2\n[smote]\ntarget_share = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.variant, Variant::Col3Del30);
        assert_eq!(cfg.feature_spec().delay_threshold_min, 30);
        assert_eq!(cfg.estimation_options().pds.c, 1.2);
        assert_eq!(cfg.smote_config().target_share, 0.5);
        assert_eq!(cfg.synthetic_config().seed, 11);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "variant = \"col9\"",
            "unknown = 1",
            "[lasso]\nc = -1.0",
            "[features]\ndelay_threshold_min = 20",
            "[data]\nsource = \"ingest\"",
            "seed = ",
        ] {
            let e = PipelineConfig::from_toml(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}: {e}");
        }
    }

    #[test]
    fn hash_ignores_location() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { out_dir: Some("/tmp/x".into()), threads: Some(3), ..a.clone() };
        assert_eq!(a.sha256(), b.sha256());
        let c = PipelineConfig { seed: 8, ..a.clone() };
        assert_ne!(a.sha256(), c.sha256());
    }

    #[test]
    fn canonical_round_trips() {
        let cfg = PipelineConfig { variant: Variant::Col6Attribution, seed: 3, ..Default::default() };
        assert_eq!(PipelineConfig::from_toml(&cfg.canonical_toml()).unwrap(), cfg);
    }
}
