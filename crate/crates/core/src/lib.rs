//! Relaxed convex variational problems with linear growth: integrands,
//! staggered grids, a primal-dual solver and dual certificates.

pub mod certificate;
pub mod convex;
pub mod energy;
pub mod error;
pub mod field_io;
pub mod gallery;
pub mod geometry;
pub mod linalg;
pub mod solver;

pub use error::{Error, Result};
