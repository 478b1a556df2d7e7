//! Prognostics toolkit built around a Wiener degradation process whose
//! expected trajectory is produced by a small recurrent/convolutional
//! encoder-decoder.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`degradation`]: moments of the degradation process and an
//!   Euler-Maruyama path simulator used as a brute-force oracle.
//! - [`net`]: the trajectory network, its likelihood, training and
//!   checkpointing.
//! - [`rul`]: first-passage RUL distributions (interpolated crossing curves
//!   and Monte-Carlo simulation), kernel density estimation and summaries.
//! - [`drift`]: Bayesian online updating of the drift rate.
//! - [`cmapss`]: C-MAPSS parsing, health-index construction and splits.
//! - [`eval`]: RMSE / PICP / MPIW and comparison tables.
//! - [`baseline`]: the linear Wiener comparator.
//! - [`pipeline`]: the experiment harness shared by the CLI and the
//!   acceptance suite.

pub mod baseline;
pub mod cmapss;
pub mod degradation;
pub mod drift;
pub mod error;
pub mod eval;
pub mod net;
pub mod pipeline;
pub mod rng;
pub mod rul;

pub use error::{Error, Result};
