//! Truncated Tucker decomposition of dense higher-order tensors under a
//! prescribed relative-error tolerance.
//!
//! The centerpiece is rank-adaptive HOOI: an alternating algorithm that
//! re-selects every mode's rank by a minimal tail-energy rule while keeping
//! the iterate feasible, so the truncation sequence only ever shrinks.
//! Fixed-rank HOOI, t-HOSVD, st-HOSVD, both greedy truncation searches and
//! classical Tucker-ALS are provided as baselines, together with synthetic
//! tensor generators and a binary tensor container for the CLI.

pub mod error;
pub mod hooi;
pub mod hosvd;
pub mod io;
pub mod report;
pub mod svdrank;
pub mod synth;
pub mod tensor;

pub use error::{Result, TensorError};
pub use hooi::{HooiConfig, RankHistory};
pub use hosvd::{TuckerModel, Truncation};
pub use report::DecompositionReport;
pub use svdrank::SvdFactors;
pub use tensor::{DenseTensor, Matrix};
