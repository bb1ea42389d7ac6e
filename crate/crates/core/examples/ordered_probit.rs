//! Fit an ordered probit to simulated ten-category ratings and print the
//! coefficient report next to the truth.
//!
//! cargo run --release --example ordered_probit

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use paxsat::features::DesignMatrix;
use paxsat::probit::report::ordered_report;
use paxsat::probit::{fit_ordered_probit, OrderedOptions};

fn main() -> paxsat::Result<()> {
    let beta = [0.5, -0.3, 0.8];
    let kappa = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.4, 0.8, 1.3, 1.9];
    let n = 5_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = (0..n)
        .map(|i| {
            let latent: f64 = (0..3).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal);
            1 + kappa.iter().filter(|k| latent > **k).count() as i64
        })
        .collect();
    let clusters = (0..n).map(|i| format!("c{}", i % 250)).collect();
    let m = DesignMatrix::new(y, x, vec!["X1".into(), "X2".into(), "X3".into()], vec![false; 3], clusters)?;
    let fit = fit_ordered_probit(&m, &OrderedOptions::default())?;
    print!("{}", ordered_report(&fit));
    println!("true beta {beta:?}");
    println!("true cutpoints {kappa:?}");
    Ok(())
}
