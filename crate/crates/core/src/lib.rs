//! Fingerprinting toolkit for small classifiers.
//!
//! A fingerprint is a set of inputs chosen near (or at) a target classifier's
//! decision boundary, together with the target's labels on those inputs.
//! Suspect models are verified by label-only queries: the fraction of
//! fingerprint labels a suspect reproduces is its matching rate. The `eval`
//! module scores a fingerprinting scheme by how well matching rates separate
//! derived copies of the target (positives) from independently trained models
//! (negatives).

pub mod data;
pub mod error;
pub mod eval;
pub mod fingerprint;
pub mod forest;
pub mod nn;
pub mod rng;
pub mod suspects;
pub mod verify;

pub use error::{Error, Result};
