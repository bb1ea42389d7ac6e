//! Build the full feature set and print descriptive statistics and the
//! on-time versus delayed satisfaction means by group.
//!
//! cargo run --release --example descriptives

use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::features::{FeatureSpec, FeatureTable};
use paxsat::pipeline::emit_descriptives;

fn main() -> paxsat::Result<()> {
    let records = synthesize_dataset(&SyntheticConfig::flagship(7))?.joined();
    let table = FeatureTable::build(&records, &FeatureSpec::default())?;
    let d = emit_descriptives(&table)?;
    println!("{:<20}{:>10}{:>10}{:>10}{:>10}", "variable", "mean", "sd", "min", "max");
    for r in &d.rows {
        println!("{:<20}{:>10.3}{:>10.3}{:>10.3}{:>10.3}", r.variable, r.mean, r.sd, r.min, r.max);
    }
    println!();
    println!("{:<44}{:>10}{:>10}", "group", "on time", "delayed");
    let cell = |v: Option<f64>| v.map_or("NA".to_string(), |m| format!("{m:.3}"));
    for r in &d.figure3 {
        println!("{:<44}{:>10}{:>10}", r.group, cell(r.on_time_mean), cell(r.delayed_mean));
    }
    Ok(())
}
