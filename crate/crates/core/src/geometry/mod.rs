//! Metric families on a single global chart, exact curvature, and pointwise
//! hypothesis certificates.

mod certify;
mod chart;
mod conformal;
mod curvature;
mod sampling;

pub use certify::{
    certify_hypotheses, verify_asymptotic_flatness, AfCheck, HypothesisCertificate,
};
pub use chart::{Decay, Domain, FamilyTag, MetricChart, MetricDerivs, DEFAULT_BASE_POINT};
pub use conformal::{Bump, ConformalFactor, FactorValue, Gaussian};
pub use curvature::{christoffel, curvature_from_derivs, CurvatureSample};
pub use sampling::{fibonacci_sphere, SamplePolicy};
