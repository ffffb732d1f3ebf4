//! Interpretable intraday trading rules learned per equity.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`data`] ingests one-minute bars, applies daily adjustment factors and
//!    union-aligns a universe of symbols onto one timestamp index.
//! 2. [`features`] computes the nine technical feature columns and the binary
//!    next-bar label.
//! 3. [`cart`] grows a Gini classification tree per symbol and exports it as
//!    readable rules or DOT.
//! 4. [`backtest`] turns predictions into delayed long/flat positions and
//!    compares them with buy-and-hold.
//! 5. [`kpi`] computes the per-stock and average-portfolio performance metrics.

pub mod backtest;
pub mod cart;
pub mod data;
pub mod error;
pub mod features;
pub mod kpi;
pub mod timefmt;

pub use error::{Error, Result};
