//! Design-automation toolkit for dual-feed microstrip patch antennas:
//! microstrip line synthesis, feed-network analysis, a multiport cavity
//! model of the patch, and matching-network optimization.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod matching;
pub mod microstrip;
pub mod netlist;
pub mod network;
pub mod patch;
pub mod units;

pub use error::{Error, Result};
pub use units::Complex;
