//! Simulation laboratory for the two-particle Fleming–Viot process on
//! `(0, ∞)`, its spine, and the 3-dimensional Bessel process.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bessel;
pub mod error;
pub mod experiments;
pub mod fv;
pub mod kernels;
pub mod output;
pub mod path;
pub mod skeleton;
pub mod stats;
pub mod strip;
pub mod verify;

pub use error::{Error, Result};
