//! Variable construction and design-matrix assembly.

pub mod design;
pub mod spec;
pub mod table;
pub mod variables;

pub use design::{group_codes, DesignMatrix};
pub use spec::{CovariateGroup, DelayEncoding, FeatureSpec};
pub use table::{assemble_design, FeatureTable, DISSAT, PANDEMIC, ROSTER, TABLE1_VARIABLES};
pub use variables::*;
