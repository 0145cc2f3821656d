//! Spacecraft attitude dynamics, reaction-wheel emulation, attitude
//! estimation and the adaptive health-estimating controller.

// `!(x > 0.0)` in validation also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod att;
pub mod control;
pub mod defaults;
pub mod dynamics;
pub mod mekf;
pub mod sensors;
pub mod wheel;

pub use att::{Mat3, Mrp, Quaternion, Vec3};
