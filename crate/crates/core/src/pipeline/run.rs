//! Staged execution. Each stage writes `*.partial` files and renames them
//! once the stage succeeds, so a failed run leaves its partial output in
//! place and never a complete-looking artifact.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::manifest::{sha256_file, Artifact, Manifest, MANIFEST_FILE};
use super::report::{emit_descriptives, emit_fit_table, emit_smote_study, FitColumn};
use super::{DataSource, PipelineConfig, Variant};
use crate::attribution::{decompose_predictions, decomposition_summary, delay_design, fit_delay_stage, plug_into_satisfaction};
use crate::data::{filter_sample, io, join_records, load_flights, load_surveys, load_terminal_hours, load_weather, synthesize_dataset, JoinedRecord};
use crate::effects::{curve_from_fit, default_grid, duration_curve, simulate_delay_shift};
use crate::estimate::{drop_collinear_controls, select_controls, Estimate};
use crate::features::{DesignMatrix, FeatureTable};
use crate::lasso::PdsSelection;
use crate::probit::report::{binary_report, ordered_report};
use crate::probit::fit_ordered_probit;
use crate::resample::smote_oversample;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Generate,
    Ingest,
    Features,
    Smote,
    Attribute,
    Select,
    Fit,
    Simulate,
    Report,
    SmoteStudy,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Generate,
        Stage::Ingest,
        Stage::Features,
        Stage::Smote,
        Stage::Attribute,
        Stage::Select,
        Stage::Fit,
        Stage::Simulate,
        Stage::Report,
        Stage::SmoteStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Smote => "smote",
            Stage::Attribute => "attribute",
            Stage::Select => "select",
            Stage::Fit => "fit",
            Stage::Simulate => "simulate",
            Stage::Report => "report",
            Stage::SmoteStudy => "smote-study",
        }
    }

    /// Stages executed, in order, to reach `self` under `config`.
    pub fn plan(self, config: &PipelineConfig) -> Vec<Stage> {
        let v = config.variant;
        Stage::ALL
            .into_iter()
            .filter(|&s| match self {
                Stage::SmoteStudy => matches!(s, Stage::Generate | Stage::Ingest | Stage::Features | Stage::SmoteStudy),
                _ => s <= self && s != Stage::SmoteStudy,
            })
            .filter(|&s| match s {
                Stage::Generate => config.data.source == DataSource::Generate,
                Stage::Smote => v.uses_smote() || self == Stage::Smote,
                Stage::Attribute => v.uses_attribution() || self == Stage::Attribute,
                _ => true,
            })
            .collect()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Artifact paths registered by one stage.
struct Outputs<'a> {
    root: &'a Path,
    files: Vec<String>,
}

impl Outputs<'_> {
    /// Partial path for artifact `rel`; parent directories are created.
    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(format!("{rel}.partial"));
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(rel.to_string());
        Ok(p)
    }

    fn text(&mut self, rel: &str, body: &str) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(p, body)?;
        Ok(())
    }

    fn matrix(&mut self, stem: &str, m: &DesignMatrix) -> Result<()> {
        m.write_csv(&self.path(&format!("{stem}.csv"))?)?;
        m.write_meta(&self.path(&format!("{stem}.meta"))?)
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    /// Fitted satisfaction model, when the run reached the fit stage.
    pub estimate: Option<Estimate>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    manifest: Manifest,
    records: Option<Vec<JoinedRecord>>,
    table: Option<FeatureTable>,
    matrix: Option<DesignMatrix>,
    selection: Option<(PdsSelection, DesignMatrix, Vec<String>)>,
    estimate: Option<Estimate>,
}

fn missing(what: &str) -> Error {
    Error::Contract(format!("{what} not available; run the earlier stages first"))
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

/// Runs every stage up to and including `target` and writes the manifest.
pub fn run_pipeline(config: &PipelineConfig, target: Stage) -> Result<RunOutcome> {
    config.validate()?;
    let out = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    let manifest_path = out.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path)?;
    }
    let mut run = Run {
        cfg: config,
        out,
        manifest: Manifest::new(config),
        records: None,
        table: None,
        matrix: None,
        selection: None,
        estimate: None,
    };
    for stage in target.plan(config) {
        run.stage(stage)?;
    }
    let partial = run.out.join(format!("{MANIFEST_FILE}.partial"));
    fs::write(&partial, run.manifest.render())?;
    fs::rename(&partial, &manifest_path)?;
    Ok(RunOutcome { out_dir: run.out, manifest: run.manifest, estimate: run.estimate })
}

impl Run<'_> {
    fn stage(&mut self, stage: Stage) -> Result<()> {
        let root = self.out.clone();
        let mut outputs = Outputs { root: &root, files: Vec::new() };
        let result = match stage {
            Stage::Generate => self.generate(&mut outputs),
            Stage::Ingest => self.ingest(&mut outputs),
            Stage::Features => self.features(&mut outputs),
            Stage::Smote => self.smote(&mut outputs),
            Stage::Attribute => self.attribute(&mut outputs),
            Stage::Select => self.select(&mut outputs),
            Stage::Fit => self.fit(&mut outputs),
            Stage::Simulate => self.simulate(&mut outputs),
            Stage::Report => self.report(&mut outputs),
            Stage::SmoteStudy => self.smote_study(&mut outputs),
        };
        result.map_err(|e| Error::Stage { stage: stage.name().to_string(), source: Box::new(e) })?;
        for rel in outputs.files {
            let final_path = root.join(&rel);
            fs::rename(root.join(format!("{rel}.partial")), &final_path)?;
            self.manifest.artifact.push(Artifact {
                stage: stage.name().to_string(),
                bytes: fs::metadata(&final_path)?.len(),
                sha256: sha256_file(&final_path)?,
                path: rel,
            });
        }
        self.manifest.run.stages.push(stage.name().to_string());
        Ok(())
    }

    fn data_dir(&self) -> PathBuf {
        match self.cfg.data.source {
            DataSource::Generate => self.out.join("data"),
            DataSource::Ingest => self.cfg.data.input_dir.clone().unwrap_or_default(),
        }
    }

    fn generate(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let d = synthesize_dataset(&self.cfg.synthetic_config())?;
        io::write_surveys(&o.path("data/surveys.csv")?, &d.surveys)?;
        io::write_flights(&o.path("data/flights.csv")?, &d.flights)?;
        io::write_weather(&o.path("data/weather.csv")?, &d.weather)?;
        io::write_terminal_hours(&o.path("data/terminal_hours.csv")?, &d.terminal_hours)?;
        o.text("data/truth.txt", &d.truth.render())
    }

    fn ingest(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let dir = self.data_dir();
        let join = |e: Error| Error::Stage { stage: "join".into(), source: Box::new(e) };
        let surveys = load_surveys(&dir.join("surveys.csv")).map_err(join)?;
        let flights = load_flights(&dir.join("flights.csv")).map_err(join)?;
        let weather = load_weather(&dir.join("weather.csv")).map_err(join)?;
        let hours = load_terminal_hours(&dir.join("terminal_hours.csv")).map_err(join)?;
        let joined = join_records(&surveys, &flights, &weather, &hours);
        let mut text = format!(
            "surveys: {}\nflights: {}\nweather observations: {}\nterminal hours: {}\njoined: {}\n",
            surveys.len(),
            flights.len(),
            weather.len(),
            hours.len(),
            joined.joined.len()
        );
        let mut rejects = std::collections::BTreeMap::new();
        for r in &joined.rejects {
            *rejects.entry(r.reason.to_string()).or_insert(0usize) += 1;
        }
        for (reason, n) in rejects {
            text.push_str(&format!("rejected ({reason}): {n}\n"));
        }
        let filtered = filter_sample(joined.joined);
        for (reason, n) in filtered.counts() {
            text.push_str(&format!("dropped ({reason}): {n}\n"));
        }
        text.push_str(&format!("kept: {}\n", filtered.kept.len()));
        if filtered.kept.is_empty() {
            return Err(Error::Data("no records survive the join and sample filters".into()));
        }
        o.text("ingest/join.txt", &text)?;
        self.records = Some(filtered.kept);
        Ok(())
    }

    fn features(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let records = self.records.as_ref().ok_or_else(|| missing("records"))?;
        let table = FeatureTable::build(records, &self.cfg.feature_spec())?;
        let matrix = table.design()?;
        let desc = emit_descriptives(&table)?;
        desc.write_table1(&o.path("features/table1.csv")?)?;
        desc.write_figure3(&o.path("features/figure3.csv")?)?;
        o.matrix("features/design", &matrix)?;
        self.table = Some(table);
        self.matrix = Some(matrix);
        Ok(())
    }

    fn smote(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let m = self.matrix.as_ref().ok_or_else(|| missing("design matrix"))?;
        let (m, s) = smote_oversample(m, &self.cfg.smote_config())?;
        o.text(
            "smote/summary.txt",
            &format!(
                "target_share: {}\nmajority: {}\nminority: {}\nminority_target: {}\nsynthetic: {}\n",
                self.cfg.smote.target_share, s.n_majority, s.n_minority, s.minority_target, s.n_synthetic
            ),
        )?;
        o.matrix("smote/design", &m)?;
        self.matrix = Some(m);
        Ok(())
    }

    fn attribute(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let table = self.table.as_ref().ok_or_else(|| missing("feature table"))?;
        let dm = delay_design(table)?;
        let fit = fit_delay_stage(&dm, &self.cfg.delay_stage_options())?;
        let mut text = match &fit.fit {
            Some(f) => binary_report(f),
            None => String::new(),
        };
        for n in fit.names.iter().zip(&fit.origins) {
            text.push_str(&format!("origin {}: {:?}\n", n.0, n.1));
        }
        for n in &fit.notes {
            text.push_str(&format!("note: {n}\n"));
        }
        o.text("attribute/delay_stage.txt", &text)?;
        let dec = decompose_predictions(&fit, &dm, self.cfg.prediction_scale())?;
        dec.write_csv(&o.path("attribute/decomposition.csv")?)?;
        let summary: String = decomposition_summary(&dec).iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
        o.text("attribute/summary.txt", &summary)?;
        if self.cfg.variant.uses_attribution() {
            let base = self.matrix.as_ref().ok_or_else(|| missing("design matrix"))?;
            let m = plug_into_satisfaction(&dec, base)?;
            o.matrix("attribute/design", &m)?;
            self.matrix = Some(m);
        }
        Ok(())
    }

    fn select(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let m = self.matrix.as_ref().ok_or_else(|| missing("design matrix"))?;
        let (selection, reduced) = select_controls(m, &self.cfg.estimation_options().pds)?;
        let (reduced, collinear) = drop_collinear_controls(&reduced)?;
        let mut text = selection.audit_report();
        for c in &collinear {
            text.push_str(&format!("collinear drop: {c}\n"));
        }
        o.text("select/audit.txt", &text)?;
        self.selection = Some((selection, reduced, collinear));
        Ok(())
    }

    fn fit(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let (selection, reduced, collinear) = self.selection.take().ok_or_else(|| missing("selection"))?;
        let fit = fit_ordered_probit(&reduced, &self.cfg.estimation_options().ordered)?;
        o.text("fit/ordered.txt", &ordered_report(&fit))?;
        let mut w = csv::Writer::from_path(o.path("fit/coefficients.csv")?)?;
        w.write_record(["term", "coef", "se"])?;
        for ((n, b), s) in fit.names.iter().zip(&fit.beta).zip(fit.se()) {
            w.write_record([n.clone(), b.to_string(), s.to_string()])?;
        }
        for (m, (k, s)) in fit.cutpoints.iter().zip(fit.cutpoint_se()).enumerate().map(|(i, p)| (i + 1, p)) {
            w.write_record([format!("cut{m}"), k.to_string(), s.to_string()])?;
        }
        w.flush()?;
        if !fit.converged {
            return Err(Error::NotConverged(format!(
                "ordered probit stopped after {} iterations (gradient max-norm {:e})",
                fit.iterations, fit.grad_max_norm
            )));
        }
        let lasso_dropped = selection.control_names.iter().filter(|n| !selection.union.contains(n)).cloned().collect();
        self.estimate = Some(Estimate { fit, selection, lasso_dropped, collinear_dropped: collinear, matrix: reduced });
        Ok(())
    }

    fn simulate(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let est = self.estimate.as_ref().ok_or_else(|| missing("fit"))?;
        match self.cfg.variant {
            Variant::T4Duration => curve_from_fit(&est.fit, &default_grid())?.write_csv(&o.path("simulate/curve.csv")?)?,
            Variant::T4DurationPooled => {
                let get = |n: &str| est.fit.coef(n).map(|c| c.0).ok_or_else(|| Error::MissingColumn(n.into()));
                duration_curve(&[("pooled", get("DELDUR")?, get("DELDUR2")?)], &default_grid())?
                    .write_csv(&o.path("simulate/curve.csv")?)?
            }
            _ => {
                let cols: Vec<&String> = est
                    .fit
                    .names
                    .iter()
                    .filter(|n| n.starts_with("DEL") && !n.starts_with("DELDUR"))
                    .collect();
                let mut summary = String::new();
                if cols.is_empty() {
                    summary.push_str("no delay column in the fitted model\n");
                }
                for c in cols {
                    let r = simulate_delay_shift(&est.fit, &est.matrix, c)?;
                    r.write_csv(&o.path(&format!("simulate/shift_{}.csv", slug(c)))?)?;
                    summary.push_str(&format!("[{c}]\n{}\n", r.summary()));
                }
                o.text("simulate/shift_summary.txt", &summary)?;
            }
        }
        Ok(())
    }

    fn report(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let est = self.estimate.as_ref().ok_or_else(|| missing("fit"))?;
        let mut col = FitColumn::from_estimate(self.cfg.variant.label(), est);
        if self.cfg.variant.uses_attribution() {
            col.estimator = "ordered probit (PDS-LASSO), delay stage probit".into();
        }
        if self.cfg.variant.uses_smote() {
            col.estimator = "ordered probit (PDS-LASSO), SMOTE".into();
        }
        o.text("report/table2.txt", &emit_fit_table(&[col])?)
    }

    fn smote_study(&mut self, o: &mut Outputs<'_>) -> Result<()> {
        let m = self.matrix.as_ref().ok_or_else(|| missing("design matrix"))?;
        let column = if m.has_column("DEL") { "DEL" } else { return Err(Error::MissingColumn("DEL".into())) };
        let s = &self.cfg.study;
        let study = emit_smote_study(m, &s.shares, s.replications, &self.cfg.smote_config(), &self.cfg.estimation_options(), column)?;
        study.write_csv(&o.path("smote_study/table3.csv")?)?;
        o.text(
            "smote_study/trend.txt",
            &format!("|{column}| rising with share: {}\n", study.magnitude_rising()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plans() {
        let cfg = PipelineConfig::default();
        assert_eq!(
            Stage::Report.plan(&cfg),
            [Stage::Generate, Stage::Ingest, Stage::Features, Stage::Select, Stage::Fit, Stage::Simulate, Stage::Report]
        );
        let c2 = PipelineConfig { variant: Variant::Col2Smote, ..cfg.clone() };
        assert!(Stage::Fit.plan(&c2).contains(&Stage::Smote));
        let c6 = PipelineConfig { variant: Variant::Col6Attribution, ..cfg.clone() };
        assert!(Stage::Select.plan(&c6).contains(&Stage::Attribute));
        assert_eq!(Stage::SmoteStudy.plan(&cfg).last(), Some(&Stage::SmoteStudy));
        assert!(!Stage::SmoteStudy.plan(&cfg).contains(&Stage::Fit));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("DEL (INT)"), "del_int");
        assert_eq!(slug("DEL × BOARD (NOT)"), "del_board_not");
    }
}
