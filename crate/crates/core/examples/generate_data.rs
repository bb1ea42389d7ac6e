//! Synthesize the flagship dataset, write its four tables, and show the
//! join/filter accounting and the generating truth.
//!
//! cargo run --release --example generate_data -- [seed] [out_dir]

use paxsat::data::{filter_sample, join_records, synthesize_dataset, SyntheticConfig};

fn main() -> paxsat::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(7, |s| s.parse().expect("seed"));
    let dir = args.next().unwrap_or_else(|| "out/example_data".into());
    let d = synthesize_dataset(&SyntheticConfig::flagship(seed))?;
    d.write(std::path::Path::new(&dir))?;
    let joined = join_records(&d.surveys, &d.flights, &d.weather, &d.terminal_hours);
    let filtered = filter_sample(joined.joined);
    println!("surveys {} flights {} weather {} terminal hours {}", d.surveys.len(), d.flights.len(), d.weather.len(), d.terminal_hours.len());
    println!("join rejects {}", joined.rejects.len());
    for (reason, n) in filtered.counts() {
        println!("dropped ({reason}): {n}");
    }
    println!("estimation sample {}", filtered.kept.len());
    print!("{}", d.truth.render());
    println!("tables written to {dir}");
    Ok(())
}
