//! Experiment harness, reporting, and file-format plumbing around the
//! `censcorr-core` estimators. The `censcorr` binary in this crate is a
//! thin shell over these modules.

pub use censcorr_core as core;

pub mod harness;
pub mod report;
