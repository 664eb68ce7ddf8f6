//! Estimation of Pearson correlation between left-censored measurement
//! series.
//!
//! The crate fits Tobit regression models (with a symmetric or an
//! asymmetric normal prior on the coefficients) to censored targets via an
//! EM algorithm whose M-step is a nonnegative least-squares problem, and
//! uses the fitted models to impute values below the detection limit
//! before computing correlations.
//!
//! Modules:
//! - [`truncnorm`] — standard/truncated normal machinery (density, CDF,
//!   inverse Mills ratio, conditional moments)
//! - [`nnls`] — active-set nonnegative least squares with KKT diagnostics
//! - [`tobit`] — model types, likelihoods, and the EM fitting loop
//! - [`correlation`] — the naive and Tobit-imputed correlation estimators
//!
//! The crate is `no_std` (with `alloc`); file formats, dataset handling
//! and the CLI live in the companion `censcorr` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod correlation;
pub mod linalg;
pub mod nnls;
pub mod tobit;
pub mod truncnorm;

mod float;
