//! Replicator and best-response dynamics for symmetric games on the simplex.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basins;
pub mod brd;
pub mod corpus;
mod dd;
pub mod equilibria;
pub mod error;
pub mod game;
pub mod rd;
pub mod regression;
pub mod simplex;
pub mod trajectory;

pub use error::{Error, Result};
