//! Naive versus controlled delay coefficient on confounded synthetic data.
//!
//! cargo run --release --example bias_comparison -- [seeds]

use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::effects::compare_bias;
use paxsat::estimate::EstimationOptions;
use paxsat::features::FeatureSpec;
use paxsat::pipeline::Variant;

fn main() -> paxsat::Result<()> {
    let seeds: u64 = std::env::args().nth(1).map_or(3, |s| s.parse().expect("seeds"));
    let naive = Variant::Col1Baseline.feature_spec();
    let controlled = FeatureSpec::default();
    for seed in 1..=seeds {
        let cfg = SyntheticConfig::flagship(seed);
        let records = synthesize_dataset(&cfg)?.joined();
        let r = compare_bias(&records, &naive, &controlled, &EstimationOptions::default(), "DEL", Some(cfg.delay_effect_true))?;
        println!("seed {seed}: {}", r.summary().replace('\n', "; "));
    }
    Ok(())
}
