//! Numerical laboratory for discrete subgroups of products of `SL(d, ℝ)`:
//! Cartan data, Poincaré series exponents, Patterson–Sullivan measures,
//! cusp spaces and critical exponents of rational integrals.

pub mod config;
pub mod cusp;
pub mod error;
pub mod group;
pub mod integrals;
pub mod lie;
pub mod limit;
pub mod linalg;
pub mod output;
pub mod poincare;
pub mod run;
pub mod stats;

pub use error::{LabError, Result};
