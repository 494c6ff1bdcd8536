//! Stabilization of parametrically uncertain autoregressive plants over
//! rate-limited channels.
//!
//! The crate covers the nonuniform quantizer that equalizes cell expansion
//! rates, the necessary and sufficient data-rate bounds, a closed-loop
//! simulator that checks the containment and scaling invariants at every step,
//! and brute-force oracles that certify the closed forms on small cases.
//!
//! Runnable walkthroughs live in `examples/`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_loop;
pub mod config;
pub mod error;
pub mod format;
pub mod intervals;
pub mod oracle;
pub mod plant;
pub mod quantizer;
pub mod rates;
pub mod report;

pub use closed_loop::{run_closed_loop, QuantizerPlan, Trajectory, Verdict};
pub use error::{Error, Result};
pub use intervals::{minkowski_sum, Interval};
pub use plant::{InitMode, PlantInstance, SampleMode, UncertainPlant};
pub use quantizer::{
    expansion_profile, optimal_boundaries, v_rate, ExpansionProfile, QuantizerSpec,
};
pub use rates::{Family, HMatrix, Schedule, StabilityVerdict};
