//! Capacity analysis of UAV-mounted mmWave access points that either hover
//! over a service area or land on its perimeter.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lifecycle;
pub mod quadrature;
pub mod scenario;
pub mod simulate;
pub mod units;

pub use error::{Error, Result};
