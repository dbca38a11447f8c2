//! Market-based returns and variances of securities, of the entire
//! market, and of a fixed portfolio, estimated from synchronized trade
//! tapes.
//!
//! The inputs are time series of trade values and volumes for J
//! securities on a common tick grid inside one averaging window. From
//! those the crate builds three single-security views: each security on
//! its own, all market trades summed per tick, and the portfolio modeled
//! by rescaling every security's trades so its window volume equals the
//! held share count. One set of estimators then covers all three:
//! volume weighted mean returns and a variance that weights price
//! deviations by squared trade volumes, so the randomness of trade
//! volumes enters the risk number instead of being assumed away.
//!
//! The classical covariance-matrix (Markowitz) portfolio variance is the
//! exact constant-volume limit of that estimator; the crate computes
//! both, plus a second-order Taylor bridge between them and a
//! decomposition of portfolio volume randomness against market volume
//! randomness, so the gap between the two risk views is measurable.
//!
//! Modules:
//! - [`tape`]: tick/tape types and per-window trade moments
//! - [`portfolio`]: base-time market and portfolio, the two
//!   single-security transformations, liquidity feasibility
//! - [`variance`]: all return/variance estimators and decompositions
//! - [`resample`]: span aggregation onto coarser grids
//! - [`simulate`]: deterministic synthetic and toy fixtures
//! - [`report`]: the composite analysis document
//! - [`io`]: tape CSV and analysis config formats
//! - [`cli`]: the `mbvar` command line
//!
//! See the crate examples for runnable walkthroughs of each capability.

pub mod cli;
pub mod error;
pub mod io;
pub mod numeric;
pub mod portfolio;
pub mod report;
pub mod resample;
pub mod simulate;
pub mod tape;
pub mod variance;

pub use error::{Error, Result};
