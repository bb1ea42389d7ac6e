//! Predicted rating shifts under delay and the delay-duration curves.
//!
//! cargo run --release --example rating_shift

use paxsat::data::{synthesize_dataset, SyntheticConfig};
use paxsat::effects::{default_grid, duration_curve, simulate_delay_shift, with_coefficient, TABLE4_DURATION};
use paxsat::estimate::{select_and_fit, EstimationOptions};
use paxsat::features::{FeatureSpec, FeatureTable};

fn main() -> paxsat::Result<()> {
    let records = synthesize_dataset(&SyntheticConfig::flagship(7))?.joined();
    let m = FeatureTable::build(&records, &FeatureSpec::default())?.design()?;
    let est = select_and_fit(&m, &EstimationOptions::default())?;
    let fitted = est.coef("DEL").expect("DEL in fit").0;
    for b in [fitted, -0.34, -0.056] {
        let f = with_coefficient(&est.fit, "DEL", b)?;
        let r = simulate_delay_shift(&f, &est.matrix, "DEL")?;
        println!("DEL = {b:.4}: mean change {:.2}%", r.mean_pct_change);
    }
    let curve = duration_curve(&TABLE4_DURATION, &default_grid())?;
    for s in &curve.segments {
        println!("{}: vertex {:?} h, value at 3 h {:.4}", s.name, s.vertex, s.values.last().unwrap());
    }
    Ok(())
}
