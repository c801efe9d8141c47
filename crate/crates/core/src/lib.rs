//! Emitters coupled to bilayer square-lattice photonic baths.

// `!(x > 0.0)` style checks are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound_state;
pub mod dynamics;
pub mod error;
pub mod giant_atom;
pub mod grid;
pub mod lattice;
pub mod linalg;
pub mod ode;
pub mod par;
pub mod spin_model;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
