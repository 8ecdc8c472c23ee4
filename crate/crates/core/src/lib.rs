//! Kinetic p-Laplace numerical workbench.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cli;
pub mod error;
pub mod exponents;
pub mod field;
pub mod geometry;
pub mod mollify;
pub mod numerics;
pub mod solver;
pub mod suite;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
