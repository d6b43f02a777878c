#![no_std]
//! Numerical core for rotating N-body relative equilibria and the
//! multi-bump gravitating-gas configurations built on them.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel drivers live in the `releq` crate.

extern crate alloc;

pub mod ansatz;
pub mod cell;
pub mod config;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod fit;
pub mod kinetic;
pub mod linalg;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod rotation;
pub mod smale;

pub use config::{MassVector, PlanarConfiguration, Vec2};
pub use error::{Error, Result};
