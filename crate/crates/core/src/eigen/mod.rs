//! Least eigenvalue of `-Δ_a - v` and its bracketing by the cube functional.

mod bracket;
mod hamiltonian;

pub use bracket::{
    bound_from_table, bracket_with, calibrate_from_cases, calibrate_thresholds, cube_bounds, cube_table,
    direct_eigenpair, phi2, phi2_beta, BetaStrategy, BracketResult, Calibration, CubeFamily, CubeFunctional,
    CubeValue, EigenSettings, TrainingCase,
};
pub use hamiltonian::{discretize_hamiltonian, least_eigenpair, least_eigenvalue, DiscreteHamiltonian, EigenPair};
