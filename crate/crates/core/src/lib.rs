//! Quantum Fisher information of the periodic transverse-field Ising chain
//! as a probe of its coupling `J`.

// `!(x > y)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimation;
pub mod fermion;
pub mod measure;
pub mod model;
pub mod optimize;
pub mod quadrature;
pub mod spin;
pub mod summation;
pub mod thermo;

pub use error::{Error, Result};
