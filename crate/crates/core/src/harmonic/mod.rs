//! Asymptotically linear harmonic coordinates on a truncated grid.

mod assembly;
mod solver;
mod triple;

pub use assembly::{assemble_laplace_beltrami, LaplaceBeltramiOperator};
pub use solver::{
    boundary_field, pcg_solve, solve_harmonic_coordinate, solve_with_operator, BoundaryPolicy, SolveStats,
    SolverOptions,
};
pub use triple::{
    build_harmonic_triple, first_derivative, second_derivative, HarmonicTriple, Normalization,
    FLAG_BOUNDARY_BAND, FLAG_EXCISED,
};

#[cfg(test)]
mod tests;
