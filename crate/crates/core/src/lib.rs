//! Generalization-error estimation for non-i.i.d. data: resampling plans
//! for clustered, spatial, temporal and hierarchical data, design-weighted
//! loss estimators, hierarchical classification metrics, built-in learners,
//! and the simulation studies that compare them.

// `!(x >= 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod experiments;
pub mod hierarchy;
pub mod learners;
pub mod metrics;
pub mod rng;
pub mod simgen;
pub mod splitters;

pub use error::{Error, Result};
