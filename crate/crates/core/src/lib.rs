//! Invariant product subspaces and generalized separable solutions of coupled
//! two-component time-fractional diffusion-convection-wave systems with cubic
//! nonlinearity, together with the numerical machinery that certifies them.
//!
//! Module layout, bottom up:
//! - [`specfun`]: Γ and the two-parameter Mittag-Leffler function.
//! - [`fracderiv`]: Caputo derivatives of time coefficients and singular convolutions.
//! - [`basis`]: exponential-polynomial-trigonometric atoms and least-squares membership.
//! - [`operators`]: the cubic operator F(u₁, u₂) and the linear diffusion-convection operator.
//! - [`subspaces`]: dimension formulas, fundamental sets, the tabulated corpus and the invariance verifier.
//! - [`reduction`]: reduced FODE systems, closed forms, a predictor-corrector oracle and solution checks.
//!
//! Special functions are generic over [`Scalar`]; everything built on top of
//! them works in [`Real`].

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod fracderiv;
pub mod operators;
pub mod reduction;
pub mod subspaces;
pub mod specfun;

pub use error::{Error, Result};

/// Floating-point types the special functions accept.
pub trait Scalar:
    num_traits::Float + num_traits::FloatConst + num_traits::FromPrimitive + std::fmt::Debug + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Working precision of the solver layers.
pub type Real = f64;

pub type MLParams64 = specfun::MLParams<f64>;
pub type MLParams32 = specfun::MLParams<f32>;
