//! Numerical laboratory for fractional Schrödinger semigroups
//! `u_t + (-Δ)^μ u + V u = 0` on a periodic torus.

// NaN must fail validation, hence `!(x > 0.0)` rather than `x <= 0.0`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod engine;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod potential;
pub mod random;
pub mod subordinator;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{
    fractional_laplacian_apply, free_semigroup_apply, lp_norm, Field, FractionalOrder, GridSpec,
    TorusGrid,
};
