//! Simulation and verification toolkit for transport along the Depauw
//! vector field: a bounded, divergence-free field that is BV away from
//! `t = 0` and along which the transport equation has several bounded weak
//! solutions.

pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod mollify;
pub mod quadrature;
pub mod testfn;
pub mod transport;
pub mod weaklimit;

pub use error::{Error, Result};
pub use geometry::{Point2, Vec2};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
