//! Aggregate flexibility of electric-vehicle charging populations.
//!
//! * [`model`]: charging requirements, profiles and the fastest-charge profile.
//! * [`majorization`]: majorization and permutahedron primitives.
//! * [`aggregate`]: exact aggregate sets, flow-based membership and inclusion.
//! * [`ambiguity`]: discrete distributions, Wasserstein distances and the
//!   distributionally robust set built from worst-case populations.
//! * [`harness`]: Monte Carlo certification of the tracking guarantee.
//! * [`scenario`]: JSON scenario files and CSV result tables.

pub mod aggregate;
pub mod ambiguity;
pub mod error;
pub mod flow;
pub mod harness;
pub mod majorization;
pub mod model;
pub mod scenario;
pub mod transport;

pub use error::{Error, Result};
