//! Gamma, incomplete beta, Bessel functions and the Bessel kernel family.

mod beta;
mod bessel;
mod gamma;
mod kernel;

pub use beta::{inc_beta, SymmetricBeta};
pub use bessel::{bessel_i, bessel_j, entire_bessel_j, modified_bessel_k, EntireBessel};
pub use gamma::{gamma, ln_gamma, rgamma};
pub use kernel::{
    bessel_kernel_profile, bessel_kernel_value, scale_profile, scaled_bessel, scaled_bessel_one,
    tent_profile, FnShape, Radial, RadialProfile,
};
