//! Post-double-selection of the penalized control blocks with the audit
//! trail of every LASSO regression.
//!
//! cargo run --release --example pds_selection

use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::estimate::select_controls;
use paxsat::features::{FeatureSpec, FeatureTable};
use paxsat::lasso::PdsOptions;

fn main() -> paxsat::Result<()> {
    let records = synthesize_dataset(&SyntheticConfig::flagship(7))?.joined();
    let m = FeatureTable::build(&records, &FeatureSpec::default())?.design()?;
    let (sel, reduced) = select_controls(&m, &PdsOptions::default())?;
    println!("lambda {:.3}", sel.lambda);
    println!("candidates {}, selected {}", sel.control_names.len(), sel.union.len());
    for r in &sel.regressions {
        println!(
            "{:<20} active {:>3}  converged {}  kkt {:.1e}",
            r.target,
            r.active.len(),
            r.converged,
            r.kkt_violation
        );
    }
    let blocks: Vec<&String> = sel.union.iter().filter(|n| !n.contains('=')).collect();
    println!("selected non-fixed-effect controls: {blocks:?}");
    println!("reduced matrix: {} columns", reduced.ncols());
    Ok(())
}
