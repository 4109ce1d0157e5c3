//! Robust differential abundance testing for compositional count data.
//!
//! The test compares two groups (or a continuous outcome) component by
//! component after repeatedly renormalizing the proportions over the
//! components not yet declared differential. The median statistic of each
//! pass tells which way the reference components shifted, so only components
//! that disagree with that shift are rejected. No pseudo-counts or log-ratios
//! are involved, which keeps the test well defined in the presence of zeros.
//!
//! Modules:
//! - [`data`]: count/metadata tables, proportions, two-group designs.
//! - [`engine`]: statistics, median-direction rule and the iterative loop.
//! - [`error_control`]: tail laws, FDR threshold search, p-value adjustments.
//! - [`balance`]: calibration weights and the weighted test.
//! - [`continuous`]: the continuous-outcome variant.
//! - [`simbench`]: simulation scenarios, baselines and scoring.

pub mod balance;
pub mod continuous;
pub mod data;
pub mod engine;
pub mod error;
pub mod error_control;
mod serde_float;
pub mod simbench;

pub use data::{CompositionMatrix, CountMatrix, SampleMetadata, TwoSampleDesign};
pub use engine::{rdb_iterate, ErrorMode, RdbConfig, TestOutcome};
pub use error::{RdbError, Result};
