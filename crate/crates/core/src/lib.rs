//! Polyhedral affine scheduling with an exact-rational LP relaxation of the
//! Pluto formulation and a fusion-conflict-graph permutation search.

#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod error;
pub mod farkas;
pub mod fcg;
pub mod frontend;
pub mod model;
pub mod output;
pub mod pipeline;
pub mod pluto;
pub mod postpass;
pub mod session;
pub mod verify;

pub use error::{Error, Result};
