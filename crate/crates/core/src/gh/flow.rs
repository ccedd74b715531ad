use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use super::distortion::ortho_defect;
use crate::geodesy::{distance, distance_with, mean_value_pick_with, DistanceOptions, PickRule};
use crate::harmonic::HarmonicTriple;
use crate::ode::{integrate, OdeOptions};
use crate::{Error, MetricChart, Result, Vec3};

const FLOW_OPTS: OdeOptions = OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: 1e-2, max_steps: 400_000 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Mean-value perturbation radius for the start of each step.
    pub rho: f64,
    pub n_samples: usize,
    /// Radius `r` of the ball `B_r(p)` the flows must stay in.
    pub ball_r: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub axis: usize,
    pub t: f64,
    pub w_star: Vec3,
    pub end: Vec3,
    /// `u(end) − u(w*) − t e_axis`
    pub u_error_vec: Vec3,
    /// `d(w*, end)`
    pub displacement: f64,
    /// `sup|∇u| · |t|`
    pub displacement_bound: f64,
}

/// Follows `ẋ = sign(t) ∇u^axis(x)` (interpolated) for time `|t|`, returning
/// the end point and `∫ Σ_ij |⟨∇u^i,∇u^j⟩ − δ^ij|` along the way.
pub fn flow(triple: &HarmonicTriple, start: &Vec3, axis: usize, t: f64) -> Result<(Vec3, f64)> {
    let sgn = t.signum();
    let y0 = SVector::<f64, 4>::new(start[0], start[1], start[2], 0.0);
    let rhs = |_s: f64, y: &SVector<f64, 4>| -> Result<SVector<f64, 4>> {
        let x = Vec3::new(y[0], y[1], y[2]);
        let mut v = [Vec3::zeros(); 3];
        for (a, va) in v.iter_mut().enumerate() {
            *va = triple.grad[a].sample(&x).ok_or(Error::LeftDomain { p: x })?;
        }
        let g = triple.chart.metric_only(&x).map_err(|_| Error::LeftDomain { p: x })?;
        let d = v[axis] * sgn;
        Ok(SVector::<f64, 4>::new(d[0], d[1], d[2], ortho_defect(&g, &v)))
    };
    let tr = integrate(rhs, 0.0, y0, t.abs(), &FLOW_OPTS)?;
    let e = tr.last();
    Ok((Vec3::new(e[0], e[1], e[2]), e[3]))
}

pub(crate) fn grad_sup_all(triple: &HarmonicTriple) -> Result<f64> {
    Ok((0..3).map(|a| triple.grad_sup(a)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max))
}

/// One perturbed gradient-flow step.
pub fn gradient_flow_step(
    chart: &MetricChart,
    triple: &HarmonicTriple,
    start: &Vec3,
    axis: usize,
    t: f64,
    params: &FlowParams,
    stream: &[u64],
) -> Result<FlowStep> {
    let p = chart.base_point;
    let grad_sup = triple.grad_sup(axis)?;
    let d0 = if start == &p { 0.0 } else { distance(chart, &p, start)?.distance };
    if d0 + grad_sup * t.abs() + params.rho >= params.ball_r {
        return Err(Error::Precondition(format!(
            "d(p, start) + sup|∇u| t + ρ = {} is not below r = {}",
            d0 + grad_sup * t.abs() + params.rho,
            params.ball_r
        )));
    }
    let score = |x: &Vec3| -> Result<f64> { Ok(flow(triple, x, axis, t)?.1) };
    let pick =
        mean_value_pick_with(chart, start, params.rho, &score, params.n_samples, params.seed, stream, PickRule::TwiceMean)?;
    let ws = pick.point;
    let (end, _) = flow(triple, &ws, axis, t)?;
    let mut e = triple.map(&end)? - triple.map(&ws)?;
    e[axis] -= t;
    let displacement =
        if end == ws { 0.0 } else { distance_with(chart, &ws, &end, &DistanceOptions::default())?.distance };
    Ok(FlowStep {
        axis,
        t,
        w_star: ws,
        end,
        u_error_vec: e,
        displacement,
        displacement_bound: grad_sup * t.abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub start: Vec3,
    pub target: Vec3,
    pub steps: Vec<FlowStep>,
    pub end: Vec3,
    /// `|u(w) − target|`
    pub u_error: f64,
    /// `d(w, p)`
    pub end_distance: f64,
}

impl FlowTrace {
    pub fn max_step_error(&self) -> f64 {
        self.steps.iter().map(|s| s.u_error_vec.norm()).fold(0.0, f64::max)
    }

    /// `max d(w*, end) / (sup|∇u| |t|)` over steps with `t ≠ 0`.
    pub fn max_displacement_ratio(&self) -> f64 {
        self.steps
            .iter()
            .filter(|s| s.displacement_bound > 0.0)
            .map(|s| s.displacement / s.displacement_bound)
            .fold(0.0, f64::max)
    }
}

/// Three flow steps from `p` along the axes with times `target¹, target², target³`.
///
/// `target_radius` is the Euclidean ball the target must lie in, with the
/// margin `0.05 · sup|∇u| · target_radius`.
pub fn reach_point(
    chart: &MetricChart,
    triple: &HarmonicTriple,
    target: &Vec3,
    target_radius: f64,
    params: &FlowParams,
    stream: &[u64],
) -> Result<FlowTrace> {
    let grad_sup = grad_sup_all(triple)?;
    let margin = 0.05 * grad_sup * target_radius;
    if target.norm() >= target_radius - margin {
        return Err(Error::Precondition(format!(
            "|target| = {} must be below {}",
            target.norm(),
            target_radius - margin
        )));
    }
    let p = chart.base_point;
    let mut cur = p;
    let mut steps = Vec::with_capacity(3);
    for axis in 0..3 {
        let mut st = stream.to_vec();
        st.push(axis as u64);
        let step = gradient_flow_step(chart, triple, &cur, axis, target[axis], params, &st)?;
        cur = step.end;
        steps.push(step);
    }
    let u_error = (triple.map(&cur)? - target).norm();
    let end_distance = if cur == p { 0.0 } else { distance(chart, &p, &cur)?.distance };
    Ok(FlowTrace { start: p, target: *target, steps, end: cur, u_error, end_distance })
}
