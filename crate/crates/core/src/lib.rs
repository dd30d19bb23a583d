//! Robust output-feedback trajectory tracking for a quadrotor whose pitch
//! and roll are not measured.
//!
//! The horizontal dynamics are brought to two fourth-order chains with a
//! thrust-dependent gain, an internal model replicates the reference
//! generator, and per-axis extended observers estimate the chain state plus
//! the lumped drift feeding a saturated control law.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altitude;
pub mod config;
pub mod controller;
pub mod csvlog;
pub mod error;
pub mod internal_model;
pub mod normal_form;
pub mod numerics;
pub mod observer;
pub mod plant;
pub mod reference;
pub mod simulator;

pub use error::{Error, Result};
