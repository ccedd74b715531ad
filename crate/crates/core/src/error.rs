use thiserror::Error;

use crate::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({0:.6}, {1:.6}, {2:.6}) lies inside the excision radius", p[0], p[1], p[2])]
    ExcisedPoint { p: Vec3 },
    #[error("point ({0:.6}, {1:.6}, {2:.6}) lies outside the chart domain", p[0], p[1], p[2])]
    OutOfDomain { p: Vec3 },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("metric has off-diagonal conductivity at ({0:.4}, {1:.4}, {2:.4}); the conservative stencil only supports diagonal metrics", p[0], p[1], p[2])]
    NonDiagonalMetric { p: Vec3 },
    #[error("extrapolation fit residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    FitFailure { residual: f64, threshold: f64 },
    #[error("linear solver stalled at relative residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("triple was solved on a different chart or grid")]
    MismatchedChart,
    #[error("trajectory left the domain at ({0:.4}, {1:.4}, {2:.4})", p[0], p[1], p[2])]
    LeftDomain { p: Vec3 },
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("shooting did not converge; graph upper bound {graph_upper_bound:.6}")]
    NoConvergence { graph_upper_bound: f64 },
    #[error("geodesic left the domain before crossing the level set")]
    NoCrossing,
    #[error("all samples were filtered out of the geodesic ball")]
    EmptySample,
    #[error("precondition violated: {0}")]
    Precondition(String),
}
