//! Record model, CSV ingestion, joining, sample filters and the synthetic
//! data generator.

pub mod filter;
pub mod io;
pub mod join;
pub mod records;
pub mod synth;

pub use filter::{filter_sample, DropReason, FilterOutcome};
pub use io::{load_flights, load_surveys, load_terminal_hours, load_weather};
pub use join::{join_records, JoinOutcome, Reject, RejectReason};
pub use records::*;
pub use synth::{synthesize_dataset, SatisfactionDelay, SyntheticConfig, SyntheticDataset, Truth};
