//! Run several variants through the pipeline and print their coefficients
//! side by side.
//!
//! cargo run --release --example pipeline_table -- [out_dir]

use paxsat::pipeline::{emit_fit_table, run_pipeline, FitColumn, PipelineConfig, Stage, Variant};

fn main() -> paxsat::Result<()> {
    let root = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/example_pipeline".into()));
    let variants = [Variant::Col1Baseline, Variant::Col3Del30, Variant::Col4Dissat, Variant::Col5Full];
    let mut runs = Vec::new();
    for v in variants {
        let cfg = PipelineConfig { variant: v, out_dir: Some(root.join(v.name())), ..Default::default() };
        runs.push((v, run_pipeline(&cfg, Stage::Fit)?));
    }
    let columns: Vec<FitColumn<'_>> = runs
        .iter()
        .map(|(v, r)| FitColumn::from_estimate(v.label(), r.estimate.as_ref().expect("fit stage ran")))
        .collect();
    print!("{}", emit_fit_table(&columns)?);
    Ok(())
}
