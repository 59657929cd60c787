//! Surface-EMG gesture biometrics.
//!
//! The pipeline runs from raw multichannel recordings to verification and
//! identification error rates:
//!
//! 1. [`dataset`] loads (or synthesizes) recordings in a canonical layout.
//! 2. [`features`] windows each trial and computes TD, FDT, AR or combined
//!    feature vectors.
//! 3. [`model`] fits one Mahalanobis class model per (gesture, user).
//! 4. [`eval`] scores held-out trials under leave-one-trial-out and reports
//!    EER/AUC for three threat scenarios plus rank-k identification errors.
//! 5. [`selection`] grows a channel subset greedily by any of those metrics.
//!
//! The [`cli`] module backs the `semg-auth` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod selection;

pub use error::{Error, Result};
