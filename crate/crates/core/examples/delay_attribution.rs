//! Split predicted delay into internal and weather components, substitute
//! them for DEL, and see which component selection keeps.
//!
//! cargo run --release --example delay_attribution -- [seed]

use paxsat::attribution::{
    decompose_predictions, decomposition_summary, delay_design, fit_delay_stage, plug_into_satisfaction,
    DelayStageOptions, PredictionScale, DEL_EXT, DEL_INT,
};
use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::estimate::{select_and_fit, EstimationOptions};
use paxsat::features::{FeatureSpec, FeatureTable};

fn main() -> paxsat::Result<()> {
    let seed = std::env::args().nth(1).map_or(3, |s| s.parse().expect("seed"));
    let records = synthesize_dataset(&SyntheticConfig::attribution_mirror(seed))?.joined();
    let table = FeatureTable::build(&records, &FeatureSpec::default())?;
    let dm = delay_design(&table)?;
    let fit = fit_delay_stage(&dm, &DelayStageOptions::default())?;
    println!("sigma_u {:?}", fit.sigma_u);
    let dec = decompose_predictions(&fit, &dm, PredictionScale::Conditional)?;
    for (k, v) in decomposition_summary(&dec) {
        println!("{k}: {v:.4}");
    }
    let m6 = plug_into_satisfaction(&dec, &table.design()?)?;
    let est = select_and_fit(&m6, &EstimationOptions::default())?;
    for name in [DEL_INT, DEL_EXT] {
        match est.coef(name) {
            Some((b, se)) => println!("{name}: {b:.4} ({se:.4})"),
            None => println!("{name}: (lasso drop)"),
        }
    }
    Ok(())
}
