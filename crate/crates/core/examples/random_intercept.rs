//! Delay-stage probit with a terminal-by-date random intercept, compared
//! with the pooled probit.
//!
//! cargo run --release --example random_intercept

use paxsat::attribution::{delay_design, fit_delay_stage, DelayEstimator, DelayStageOptions};
use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::features::{FeatureSpec, FeatureTable};
use paxsat::probit::report::binary_report;

fn main() -> paxsat::Result<()> {
    let records = synthesize_dataset(&SyntheticConfig::attribution_mirror(3))?.joined();
    let table = FeatureTable::build(&records, &FeatureSpec::default())?;
    let dm = delay_design(&table)?;
    for estimator in [DelayEstimator::Pooled, DelayEstimator::RandomIntercept] {
        let fit = fit_delay_stage(&dm, &DelayStageOptions { estimator, ..Default::default() })?;
        println!("== {estimator:?}");
        if let Some(f) = &fit.fit {
            print!("{}", binary_report(f));
        }
    }
    Ok(())
}
