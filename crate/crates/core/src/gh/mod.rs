//! The harmonic map `u = (u¹, u², u³)` as an approximate isometry: sampled
//! distortion, gradient-flow surjectivity and the mass sweep.

mod distortion;
mod flow;
mod sweep;

pub use distortion::{gh_distortion, ortho_l1, sample_geodesic_ball, DistortionReport};
pub use flow::{flow, gradient_flow_step, reach_point, FlowParams, FlowStep, FlowTrace};
pub use sweep::{
    flow_traces, pythagorean_records, run_point, seeded_targets, summarize_pythagorean, stability_sweep, sweep_trends, PythagoreanSummary, StabilityReport, SweepProtocol,
    SweepTrends,
};

#[cfg(test)]
mod tests;
