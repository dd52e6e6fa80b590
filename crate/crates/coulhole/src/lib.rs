//! File formats, parallel Monte Carlo and the command-line front end for
//! `coulhole-core`.

#![warn(missing_docs)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
