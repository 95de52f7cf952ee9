//! Poincaré series, boundary measures and spectral estimates on free groups.

pub mod acceptance;
pub mod boundary;
pub mod config;
pub mod error;
pub mod gns;
pub mod group;
pub mod numeric;
pub mod poincare;
pub mod posdef;
pub mod report;
pub mod spectral;
pub mod spherical;

pub use error::{Error, Result};
pub use group::{GroupParams, RadialFunction, ResourceCaps, SparseGroupFunction, Word};
