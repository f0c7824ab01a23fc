//! Symbolic-dynamics laboratory for level sets of shadowing times.
//!
//! On a mixing subshift of finite type with a nonnegative locally constant
//! potential `f`, the set of points whose orbit shadows a target `x₀` for about
//! `S_n f` steps at time `n` has Bowen entropy equal to the root `s₀` of
//! `P(−s(f+1)) = 0`. This crate computes that root, builds the Moran fractal
//! behind the lower bound and evaluates finite-scale upper and lower estimates.

// `!(x > 0.0)` rejects NaN on purpose; matrix code indexes by symbol.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod cli;
pub mod dimension;
pub mod error;
pub mod io;
pub mod moran;
pub mod numeric;
pub mod symbolic;
pub mod thermo;

pub use error::{Error, Result};
