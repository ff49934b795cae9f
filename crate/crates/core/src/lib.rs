//! Type-II spontaneous parametric down-conversion in dual periodically
//! poled planar waveguides.

// NaN-rejecting `!(x > y)` guards and full-precision tabulated constants are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod config;
pub mod design;
pub mod dispersion;
pub mod error;
pub mod medium;
pub mod phasematch;
pub mod power;
pub mod quadrature;
pub mod roots;
pub mod slabmode;
pub mod state;

pub use error::{Error, Result};
