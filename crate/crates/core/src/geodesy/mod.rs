//! Geodesics, distances and the metric diagnostics built on them.

mod bvp;
mod fmm;
mod functional;
mod graph;
mod shoot;

pub use bvp::{distance, distance_with, DistanceOptions, DistanceResult};
pub use fmm::{bishop_gromov_check, hyperbolic_ball_volume, BishopGromovReport, DistanceField};
pub use functional::{
    hessian_norm_field, level_set_projection, mean_value_pick, mean_value_pick_with, pythagorean_check, segment_functional,
    segment_functional_sup, MeanValuePick, PickRule, Projection, ProjectionParams, PythagoreanRecord,
};
pub use graph::graph_distance;
pub use shoot::{shoot_geodesic, shoot_with, GeodesicPath, PathMethod};
