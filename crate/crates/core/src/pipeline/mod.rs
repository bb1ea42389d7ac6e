//! Pipeline orchestration: configuration, named model variants, staged
//! execution with a checksum manifest, and report emitters.

pub mod config;
pub mod manifest;
pub mod report;
pub mod run;
pub mod variant;

pub use config::{DataSource, PipelineConfig, Preset};
pub use manifest::{Manifest, MANIFEST_FILE};
pub use report::{emit_descriptives, emit_fit_table, emit_smote_study, Descriptives, FitColumn, SmoteStudy};
pub use run::{run_pipeline, RunOutcome, Stage};
pub use variant::Variant;
