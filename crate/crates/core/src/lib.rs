//! Numerical laboratory for the positive-mass stability chain on closed-form
//! asymptotically flat 3-metrics.
//!
//! The pipeline runs, per metric:
//!
//! 1. [`geometry`]: exact metric, Christoffel and curvature evaluation plus
//!    pointwise certificates of the decay and curvature hypotheses.
//! 2. [`mass`]: ADM mass by coordinate-sphere quadrature and radius
//!    extrapolation.
//! 3. [`harmonic`]: the three asymptotically linear harmonic coordinates on a
//!    truncated Cartesian grid, with gradient and covariant Hessian fields.
//! 4. [`inequality`]: the harmonic-function mass inequality integrand, the
//!    L² Hessian bound and the relaxed scalar-curvature certificate.
//! 5. [`geodesy`]: minimizing geodesics, distances, segment functionals,
//!    level-set projections and Bishop–Gromov volume ratios.
//! 6. [`gh`]: distortion of the harmonic coordinate map, gradient-flow
//!    surjectivity and the mass sweep that ties everything together.

pub mod error;
pub mod geodesy;
pub mod geometry;
pub mod gh;
pub mod grid;
pub mod harmonic;
pub mod inequality;
pub mod mass;
pub mod ode;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

pub use geometry::{
    CurvatureSample, Decay, Domain, FamilyTag, HypothesisCertificate, MetricChart, SamplePolicy,
};

pub use geodesy::{GeodesicPath, PythagoreanRecord};
pub use gh::{DistortionReport, FlowTrace, StabilityReport};
pub use grid::{Grid, ScalarGridField, SymmetricGridField, VectorGridField};
pub use harmonic::{BoundaryPolicy, HarmonicTriple, Normalization};
pub use inequality::{InequalityReport, RelaxedScalarCertificate};
pub use mass::MassReport;

/// Chart coordinates and tangent vectors.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrices (metric, Ricci, Hessian).
pub type Mat3 = nalgebra::Matrix3<f64>;
