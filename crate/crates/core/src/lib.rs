//! Numerical laboratory for Bayes estimators under L^p loss in scalar
//! signal-plus-noise channels.
//!
//! The crate is organized bottom-up:
//!
//! - [`specfun`]: normal pdf/cdf, Dawson, complex erf, Hermite, incomplete gamma
//! - [`models`]: priors, noise channels and the special prior families
//! - [`posterior`]: posterior grids and mean / median / L^p estimators
//! - [`linearity`]: linearity residuals, the signed-kernel operator, `f_p`
//! - [`risk`]: Bayes risk of linear estimators by quadrature and Monte Carlo

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod grid;
pub mod linearity;
pub mod models;
pub mod posterior;
pub mod quad;
pub mod risk;
pub mod roots;
pub mod specfun;

pub use error::{Error, Result};
