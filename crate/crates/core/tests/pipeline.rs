//! End-to-end pipeline behaviour: manifests, stage failures, reports.

use std::fs;
use std::path::Path;

use paxsat::pipeline::{run_pipeline, DataSource, Manifest, PipelineConfig, Stage, Variant, MANIFEST_FILE};
use paxsat::Error;

fn small(variant: Variant, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig { variant, seed: 5, out_dir: Some(out.to_path_buf()), ..Default::default() };
    cfg.data.n_respondents = Some(2_000);
    cfg
}

#[test]
fn del30_variant_is_recorded_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&small(Variant::Col3Del30, dir.path()), Stage::Features).unwrap();
    assert_eq!(out.manifest.run.delay_threshold_min, 30);
    let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(text.contains("delay_threshold_min = 30"), "{text}");
    assert_eq!(out.manifest.run.stages, ["generate", "ingest", "features"]);
}

#[test]
fn missing_flights_halts_at_join() {
    let src = tempfile::tempdir().unwrap();
    run_pipeline(&small(Variant::Col5Full, src.path()), Stage::Generate).unwrap();
    fs::remove_file(src.path().join("data/flights.csv")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Variant::Col5Full, dir.path());
    cfg.data.source = DataSource::Ingest;
    cfg.data.input_dir = Some(src.path().join("data"));
    let err = run_pipeline(&cfg, Stage::Fit).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("join") && msg.contains("flights.csv"), "{msg}");
    let Error::Stage { stage, source } = &err else { panic!("{err:?}") };
    assert_eq!(stage, "ingest");
    assert!(matches!(source.as_ref(), Error::Stage { source, .. } if matches!(source.as_ref(), Error::FileNotFound(_))));
    assert_eq!(err.exit_code(), 3);
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn non_convergence_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Variant::Col1Baseline, dir.path());
    cfg.fit.max_iter = 1;
    let err = run_pipeline(&cfg, Stage::Report).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");
    assert!(dir.path().join("fit/ordered.txt.partial").exists());
    assert!(!dir.path().join("fit/ordered.txt").exists());
    assert!(dir.path().join("select/audit.txt").exists());
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&small(Variant::Col4Dissat, a.path()), Stage::Features).unwrap();
    let mut cfg = PipelineConfig::load(&a.path().join(MANIFEST_FILE)).unwrap();
    cfg.out_dir = Some(b.path().to_path_buf());
    run_pipeline(&cfg, Stage::Features).unwrap();
    let read = |d: &Path| fs::read(d.join(MANIFEST_FILE)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let m = Manifest::read(&b.path().join(MANIFEST_FILE)).unwrap();
    assert!(m.verify(b.path()).is_empty());
    assert!(m.artifact.iter().all(|x| !x.path.starts_with('/')));
}

#[test]
fn descriptives_and_figure3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Variant::Col5Full, dir.path());
    cfg.data.n_respondents = None;
    run_pipeline(&cfg, Stage::Features).unwrap();
    let t1 = fs::read_to_string(dir.path().join("features/table1.csv")).unwrap();
    let del: Vec<f64> = t1
        .lines()
        .find(|l| l.starts_with("DEL,"))
        .unwrap()
        .split(',')
        .skip(2)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((del[0] - 0.17).abs() <= 0.02, "DEL mean {}", del[0]);
    let f3 = fs::read_to_string(dir.path().join("features/figure3.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(f3.as_bytes());
    let mut groups = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if let (Ok(on), Ok(del)) = (rec[1].parse::<f64>(), rec[2].parse::<f64>()) {
            assert!(del < on, "{:?}", rec);
            groups += 1;
        }
    }
    assert!(groups >= 20);
}

#[test]
fn variants_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&small(Variant::T4Duration, dir.path()), Stage::Report).unwrap();
    let curve = fs::read_to_string(dir.path().join("simulate/curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "t,leisure,business");
    assert_eq!(curve.lines().count(), 62);
    assert!(out.manifest.run.stages.contains(&"report".to_string()));

    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&small(Variant::Col2Smote, dir.path()), Stage::Report).unwrap();
    let summary = fs::read_to_string(dir.path().join("smote/summary.txt")).unwrap();
    assert!(summary.contains("synthetic:"));
    let table = fs::read_to_string(dir.path().join("report/table2.txt")).unwrap();
    assert!(table.contains("SMOTE") && table.contains("DEL"));
    let shift = fs::read_to_string(dir.path().join("simulate/shift_summary.txt")).unwrap();
    assert!(shift.contains("mean_pct_change"));
}

#[test]
fn smote_study_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Variant::Col2Smote, dir.path());
    cfg.study.shares = vec![0.40, 0.50];
    cfg.study.replications = 1;
    run_pipeline(&cfg, Stage::SmoteStudy).unwrap();
    let t3 = fs::read_to_string(dir.path().join("smote_study/table3.csv")).unwrap();
    let mut lines = t3.lines();
    assert_eq!(lines.next().unwrap(), "share,minority_size,mean_DEL");
    assert_eq!(lines.count(), 2);
}
