//! Core models for leader-follower autonomous truck-mounted attenuator (ATMA)
//! operation.
//!
//! Everything here is `no_std` (with `alloc`): unit-safe quantities, telemetry
//! record types, calibration statistics, the closed-form operating thresholds
//! and a time-stepping kinematic simulator used to cross-check them. File
//! formats, IO and the command line live in the `atma` crate.
//!
//! All arithmetic is carried out in feet, seconds, ft/s and ft/s². Miles per
//! hour only appear at constructor/accessor boundaries.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod error;
pub mod guidance;
pub mod log;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
pub use units::{
    Deceleration, Distance, Duration, RoadGeometry, SignedDistance, Speed, VehicleSpec,
};
