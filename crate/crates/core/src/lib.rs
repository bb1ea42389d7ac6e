//! Passenger-satisfaction econometrics.
//!
//! The crate turns joined survey, flight, terminal and weather tables into
//! psychosituational control variables, selects controls with
//! post-double-selection LASSO, estimates ordered-probit satisfaction models
//! and (random-intercept) probit delay models, splits predicted delays into
//! internal and weather-driven components, and measures how much of the
//! naive delay effect the controls remove.
//!
//! A seeded synthetic generator ([`data::synth`]) with a known
//! data-generating process stands in for proprietary survey microdata.
//!
//! ```text
//! data ──► features ──► resample (SMOTE) ──► lasso (PDS) ──► probit ──► effects
//!                  └──────────────► attribution ─┘
//! pipeline: staged orchestration, manifests and report tables
//! ```

pub mod attribution;
pub mod data;
pub mod effects;
pub mod error;
pub mod estimate;
pub mod features;
pub mod lasso;
pub mod linalg;
pub mod pipeline;
pub mod probit;
pub mod resample;

pub use error::{Error, Result};
