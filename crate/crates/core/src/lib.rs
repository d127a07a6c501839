//! Pure building blocks for measuring road condition from sampled street-level
//! imagery.
//!
//! The crate is `no_std` (with `alloc`) and does no IO. Parsing, HTTP and file
//! formats live in the `roadsense` companion crate; everything here is a
//! deterministic function of its inputs.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod coverage;
mod error;
pub mod geo;
pub mod labels;
pub mod network;
pub mod sample;
pub mod segment;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use geo::{GeoPoint, PolygonRing, Polyline};
pub use network::{HighwayClass, RoadNetwork, Way};
