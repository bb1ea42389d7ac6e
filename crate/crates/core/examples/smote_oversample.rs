//! Exact minority targets for the published split, then SMOTE on a real
//! design matrix.
//!
//! cargo run --release --example smote_oversample

use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::features::FeatureTable;
use paxsat::pipeline::Variant;
use paxsat::resample::{smote_oversample, target_count, SmoteConfig};

fn main() -> paxsat::Result<()> {
    for share in [0.35, 0.40, 0.45, 0.50, 0.55] {
        println!("share {share:.2}: minority target {}", target_count(9_095, 3_976, share)?);
    }
    let records = synthesize_dataset(&SyntheticConfig { n_respondents: 4_000, ..SyntheticConfig::flagship(7) })?.joined();
    let m = FeatureTable::build(&records, &Variant::Col2Smote.feature_spec())?.design()?;
    let (over, s) = smote_oversample(&m, &SmoteConfig::default())?;
    println!(
        "rows {} -> {}: majority {}, minority {} -> {}, synthetic {}",
        m.nrows(),
        over.nrows(),
        s.n_majority,
        s.n_minority,
        s.minority_target,
        s.n_synthetic
    );
    let first = over.synthetic.iter().position(|b| *b).expect("synthetic rows");
    println!("first synthetic row id {}", over.row_ids[first]);
    Ok(())
}
