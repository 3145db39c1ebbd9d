//! Bessel translation, convolution and potential theory on the positive orthant
//! `ℝⁿ₊` with the weight `x^a = Π x_i^{2α_i+1}`.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases below
//! fix the common double-precision case.

pub mod cheb;
pub mod convolution;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod hankel;
pub mod measure;
pub mod params;
pub mod quad;
pub mod scalar;
pub mod specfun;
pub mod trace;
pub mod translation;

pub use error::{Error, Result};

/// Library version embedded in generated reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use grid::{weighted_inner_product, weighted_norm, Grid, GridFunction};
pub use params::BesselParams;
pub use quad::{make_angular_rule, QuadratureRule};
pub use scalar::Real;
pub use specfun::{Radial, RadialProfile};

pub type BesselParams64 = BesselParams<f64>;
pub type Grid64 = Grid<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type RadialProfile64 = RadialProfile<f64>;
