use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distortion::{gh_distortion, sample_geodesic_ball, DistortionReport};
use super::flow::{reach_point, FlowParams, FlowTrace};
use crate::geodesy::{pythagorean_check, ProjectionParams, PythagoreanRecord};
use crate::geometry::{certify_hypotheses, SamplePolicy};
use crate::harmonic::{build_harmonic_triple, BoundaryPolicy, HarmonicTriple, Normalization, SolverOptions};
use crate::inequality::{mass_inequality_rhs, InequalityReport};
use crate::mass::{adm_mass, ExtrapolationModel, SphereRule, DEFAULT_FIT_THRESHOLD};
use crate::{rng, stats, Error, Grid, HypothesisCertificate, MassReport, MetricChart, Result, Vec3};

/// Everything a sweep point needs besides the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepProtocol {
    pub grid: Grid,
    pub bc: BoundaryPolicy,
    pub solver: SolverOptions,
    /// Relative to `sup |∇u|`.
    pub eps_grad: f64,
    pub mass_radii: Vec<f64>,
    /// Radius of `B_r(p)`.
    pub r: f64,
    pub n_pairs: usize,
    pub n_pyth_pairs: usize,
    pub n_targets: usize,
    pub target_radius: f64,
    pub rho: f64,
    pub n_samples: usize,
    pub far_l: f64,
    pub flow_ball_r: f64,
    pub seed: u64,
}

impl SweepProtocol {
    /// Desk-scale defaults on a grid of `n` nodes per axis over `[−r_out, r_out]³`.
    pub fn desk(n: usize, r_out: f64, seed: u64) -> Result<Self> {
        let grid = Grid::new(n, r_out)?;
        Ok(SweepProtocol {
            grid,
            bc: BoundaryPolicy::Corrected,
            solver: SolverOptions::default(),
            eps_grad: 1e-6,
            mass_radii: vec![25.0, 50.0, 100.0],
            r: 3.0,
            n_pairs: 200,
            n_pyth_pairs: 50,
            n_targets: 20,
            target_radius: 2.0,
            rho: 2.0 * grid.h(),
            n_samples: 8,
            far_l: 0.6 * r_out,
            flow_ball_r: 0.5 * r_out,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PythagoreanSummary {
    pub n_records: usize,
    pub n_failed: usize,
    pub median_defect: f64,
    pub max_defect: f64,
    pub median_u_defect_same: f64,
    pub median_u_defect_cross: f64,
    /// `max d(p, z)` over records (boundedness of projections).
    pub max_dpz_chart: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub family: String,
    pub parameter: String,
    pub value: f64,
    pub n: usize,
    pub r_out: f64,
    /// First stage that failed, if any; later stages are skipped.
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub certificate: Option<HypothesisCertificate>,
    pub mass: Option<MassReport>,
    pub inequality: Vec<InequalityReport>,
    pub distortion: Option<DistortionReport>,
    pub pythagorean: Option<PythagoreanSummary>,
    pub flows: Vec<FlowTrace>,
    pub solver_iterations: [usize; 3],
    pub residual_norm: [f64; 3],
    pub divergence_l1: [f64; 3],
    pub cheng_yau: [f64; 3],
    /// Largest `hessian_l2` over the three coordinates.
    pub hessian_l2: f64,
    pub grad_sup: f64,
    pub ortho_l1: f64,
    pub image_hausdorff: f64,
    pub flow_err_max: f64,
    pub flow_displacement_ratio_max: f64,
}

impl StabilityReport {
    fn new(chart: &MetricChart, parameter: &str, value: f64, grid: &Grid) -> Self {
        StabilityReport {
            family: chart.family.name().to_string(),
            parameter: parameter.to_string(),
            value,
            n: grid.n,
            r_out: grid.r_out,
            failed_stage: None,
            error: None,
            certificate: None,
            mass: None,
            inequality: Vec::new(),
            distortion: None,
            pythagorean: None,
            flows: Vec::new(),
            solver_iterations: [0; 3],
            residual_norm: [0.0; 3],
            divergence_l1: [0.0; 3],
            cheng_yau: [0.0; 3],
            hessian_l2: f64::NAN,
            grad_sup: f64::NAN,
            ortho_l1: f64::NAN,
            image_hausdorff: f64::NAN,
            flow_err_max: f64::NAN,
            flow_displacement_ratio_max: f64::NAN,
        }
    }

    pub fn mass_value(&self) -> f64 {
        self.mass.as_ref().map_or(f64::NAN, |m| m.extrapolated)
    }
}

/// Seeded targets in the Euclidean ball of radius `0.9 (radius − margin)`.
pub fn seeded_targets(n: usize, radius: f64, margin: f64, seed: u64) -> Vec<Vec3> {
    let mut r = rng::stream(seed, &[0x7A6]);
    (0..n).map(|_| rng::uniform_in_ball(&mut r, &Vec3::zeros(), 0.9 * (radius - margin))).collect()
}

/// `n_pyth_pairs` seeded pairs from `B_r(p)`, cycling the projection axis.
/// Per-pair failures are kept in place.
pub fn pythagorean_records(
    chart: &MetricChart,
    triple: &HarmonicTriple,
    proto: &SweepProtocol,
) -> Result<Vec<Result<PythagoreanRecord>>> {
    let pts = sample_geodesic_ball(chart, &chart.base_point, proto.r, 2 * proto.n_pyth_pairs, proto.seed, &[0x9A7])?;
    let pp = ProjectionParams { rho: proto.rho, n_samples: proto.n_samples, far_l: proto.far_l, seed: proto.seed };
    Ok((0..proto.n_pyth_pairs)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (pts[2 * k].0, pts[2 * k + 1].0);
            pythagorean_check(chart, triple, &x, &y, k % 3, &pp, &[0x9A7, k as u64])
        })
        .collect())
}

/// `None` when every pair failed.
pub fn summarize_pythagorean(chart: &MetricChart, recs: &[Result<PythagoreanRecord>]) -> Option<PythagoreanSummary> {
    let ok: Vec<&PythagoreanRecord> = recs.iter().flatten().collect();
    if ok.is_empty() {
        return None;
    }
    let col = |f: &dyn Fn(&PythagoreanRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
    Some(PythagoreanSummary {
        n_records: ok.len(),
        n_failed: recs.len() - ok.len(),
        median_defect: stats::median(&col(&|r| r.defect)),
        max_defect: col(&|r| r.defect).into_iter().fold(0.0, f64::max),
        median_u_defect_same: stats::median(&col(&|r| r.u_defect_same)),
        median_u_defect_cross: stats::median(&col(&|r| r.u_defect_cross)),
        max_dpz_chart: col(&|r| (r.z - chart.base_point).norm()).into_iter().fold(0.0, f64::max),
    })
}

/// `reach_point` for `n_targets` seeded targets.
pub fn flow_traces(chart: &MetricChart, triple: &HarmonicTriple, proto: &SweepProtocol) -> Vec<Result<FlowTrace>> {
    let grad_sup = match super::flow::grad_sup_all(triple) {
        Ok(g) => g,
        Err(e) => return vec![Err(e)],
    };
    let fp = FlowParams { rho: proto.rho, n_samples: proto.n_samples, ball_r: proto.flow_ball_r, seed: proto.seed };
    let margin = 0.05 * grad_sup * proto.target_radius;
    seeded_targets(proto.n_targets, proto.target_radius, margin, proto.seed)
        .par_iter()
        .enumerate()
        .map(|(k, t)| reach_point(chart, triple, t, proto.target_radius, &fp, &[0xF10, k as u64]))
        .collect()
}

/// Runs the whole pipeline for one chart.
pub fn run_point(chart: &MetricChart, parameter: &str, value: f64, proto: &SweepProtocol) -> StabilityReport {
    let mut rep = StabilityReport::new(chart, parameter, value, &proto.grid);
    macro_rules! stage {
        ($name:expr, $e:expr) => {
            match $e {
                Ok(v) => v,
                Err(err) => {
                    rep.failed_stage = Some($name.to_string());
                    rep.error = Some(err.to_string());
                    return rep;
                }
            }
        };
    }
    rep.certificate = Some(certify_hypotheses(chart, &SamplePolicy::default()));
    let mass = stage!(
        "mass",
        adm_mass(chart, &proto.mass_radii, ExtrapolationModel::FromDecay, &SphereRule::default(), DEFAULT_FIT_THRESHOLD)
    );
    let m = mass.extrapolated;
    rep.mass = Some(mass);
    let triple = stage!(
        "harmonic",
        build_harmonic_triple(chart, &proto.grid, proto.bc, Normalization::BasePoint, &proto.solver)
    );
    rep.solver_iterations = triple.iterations;
    rep.residual_norm = triple.residual_norm;
    rep.divergence_l1 = triple.divergence_l1;
    for a in 0..3 {
        rep.cheng_yau[a] = stage!("harmonic", triple.cheng_yau_ratio(a, 0.5 * proto.r));
    }
    for a in 0..3 {
        rep.inequality.push(stage!("inequality", mass_inequality_rhs(&triple, chart, a, proto.eps_grad, m)));
    }
    rep.hessian_l2 = rep.inequality.iter().map(|r| r.hessian_l2).fold(0.0, f64::max);
    rep.grad_sup = rep.inequality.iter().map(|r| r.grad_sup).fold(0.0, f64::max);
    let mut dist = stage!("distortion", gh_distortion(chart, &triple, proto.r, proto.n_pairs, proto.seed));
    rep.ortho_l1 = dist.ortho_l1;

    if proto.n_pyth_pairs > 0 {
        let recs = stage!("pythagoras", pythagorean_records(chart, &triple, proto));
        rep.pythagorean =
            Some(stage!("pythagoras", summarize_pythagorean(chart, &recs).ok_or(Error::EmptySample)));
    }

    for t in flow_traces(chart, &triple, proto) {
        rep.flows.push(stage!("flow", t));
    }
    rep.flow_err_max = rep.flows.iter().map(|t| t.max_step_error()).fold(0.0, f64::max);
    rep.image_hausdorff = rep.flows.iter().map(|t| t.u_error).fold(0.0, f64::max);
    rep.flow_displacement_ratio_max = rep.flows.iter().map(|t| t.max_displacement_ratio()).fold(0.0, f64::max);
    dist.image_hausdorff = Some(rep.image_hausdorff);
    rep.distortion = Some(dist);
    rep
}

/// One report per parameter value, in the given order. Points run
/// concurrently; stage failures are recorded in the report and the sweep
/// continues.
pub fn stability_sweep(
    base: &MetricChart,
    parameter: &str,
    values: &[f64],
    proto: &SweepProtocol,
) -> Result<Vec<StabilityReport>> {
    if values.len() > 1 && values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("sweep values must be strictly decreasing".into()));
    }
    values
        .par_iter()
        .map(|&v| {
            let chart = if base.params.is_empty() && v == 0.0 { base.clone() } else { base.with_param(parameter, v)? };
            Ok(run_point(&chart, parameter, v, proto))
        })
        .collect()
}

/// Monotone-trend checks over a sweep (values decreasing toward 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrends {
    pub mass: bool,
    pub hessian_l2: bool,
    pub ortho_l1: bool,
    pub distortion_p50: bool,
    pub distortion_p90: bool,
    pub pythagorean_median: bool,
    pub flow_error: bool,
    pub hessian_bound: bool,
}

impl SweepTrends {
    pub fn all(&self) -> bool {
        self.mass
            && self.hessian_l2
            && self.ortho_l1
            && self.distortion_p50
            && self.distortion_p90
            && self.pythagorean_median
            && self.flow_error
            && self.hessian_bound
    }
}

pub fn sweep_trends(reports: &[StabilityReport]) -> SweepTrends {
    let col = |f: &dyn Fn(&StabilityReport) -> Option<f64>| -> Option<Vec<f64>> { reports.iter().map(f).collect() };
    let dec = |v: Option<Vec<f64>>| v.is_some_and(|v| stats::strictly_decreasing(&v));
    let bound = reports.iter().all(|r| {
        r.failed_stage.is_none()
            && r.inequality.iter().all(|i| i.hessian_l2 <= 16.0 * std::f64::consts::PI * i.grad_sup * i.mass * 1.1 + 1e-12)
    });
    SweepTrends {
        mass: dec(col(&|r| r.mass.as_ref().map(|m| m.extrapolated))),
        hessian_l2: dec(col(&|r| r.failed_stage.is_none().then_some(r.hessian_l2))),
        ortho_l1: dec(col(&|r| r.distortion.as_ref().map(|d| d.ortho_l1))),
        distortion_p50: dec(col(&|r| r.distortion.as_ref().map(|d| d.p50))),
        distortion_p90: dec(col(&|r| r.distortion.as_ref().map(|d| d.p90))),
        pythagorean_median: dec(col(&|r| r.pythagorean.as_ref().map(|p| p.median_defect))),
        flow_error: dec(col(&|r| r.failed_stage.is_none().then_some(r.image_hausdorff))),
        hessian_bound: bound,
    }
}
