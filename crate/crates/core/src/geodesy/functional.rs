use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bvp::{distance, distance_with, DistanceOptions, DistanceResult};
use super::shoot::GeodesicPath;
use crate::harmonic::HarmonicTriple;
use crate::{rng, Error, MetricChart, Result, ScalarGridField, Vec3};

/// `∫₀^L f(γ(s)) ds` by composite Simpson on the path nodes.
pub fn segment_functional(path: &GeodesicPath, f: &ScalarGridField) -> Result<f64> {
    let n = path.nodes.len();
    if n < 2 || path.length == 0.0 {
        return Ok(0.0);
    }
    let vals: Vec<f64> = path
        .nodes
        .iter()
        .map(|p| f.sample(p).ok_or(Error::OutOfDomain { p: *p }))
        .collect::<Result<_>>()?;
    let h = path.step();
    let intervals = n - 1;
    if intervals % 2 == 1 {
        // trapezoid fallback for odd interval counts
        let inner: f64 = vals[1..n - 1].iter().sum();
        return Ok(h * (0.5 * (vals[0] + vals[n - 1]) + inner));
    }
    let mut acc = vals[0] + vals[n - 1];
    for (k, v) in vals.iter().enumerate().take(n - 1).skip(1) {
        acc += v * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    Ok(acc * h / 3.0)
}

/// Segment functional over all recorded minimizers (their maximum).
pub fn segment_functional_sup(result: &DistanceResult, f: &ScalarGridField) -> Result<f64> {
    let mut best = segment_functional(&result.path, f)?;
    for alt in &result.alternates {
        best = best.max(segment_functional(alt, f)?);
    }
    Ok(best)
}

/// `Σ_j |∇²u^j|_g` at every grid node (0 on flagged nodes).
pub fn hessian_norm_field(triple: &HarmonicTriple) -> Result<ScalarGridField> {
    let grid = triple.grid;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !triple.is_valid(i) {
                return Ok(0.0);
            }
            let g = triple.chart.metric_only(&grid.point_of(i))?;
            let gi = g.try_inverse().ok_or(Error::InvalidChart("singular metric".into()))?;
            Ok((0..3)
                .map(|a| {
                    let hu = gi * triple.hess[a].at(i);
                    (hu * hu).trace().max(0.0).sqrt()
                })
                .sum())
        })
        .collect::<Result<_>>()?;
    Ok(ScalarGridField { grid, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValuePick {
    pub point: Vec3,
    pub score: f64,
    /// Scores of the samples that survived the geodesic-ball filter, in
    /// sample order.
    pub sample_scores: Vec<f64>,
}

impl MeanValuePick {
    pub fn mean_score(&self) -> f64 {
        self.sample_scores.iter().sum::<f64>() / self.sample_scores.len() as f64
    }
}

/// Which scored candidate [`mean_value_pick_with`] returns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PickRule {
    /// Lowest score, earliest candidate on ties.
    #[default]
    Minimize,
    /// Earliest candidate (the center comes first) scoring at most twice the
    /// candidate mean. Such a candidate always exists for nonnegative scores,
    /// and unlike the minimizer it stays at the center when the score field
    /// is nearly constant.
    TwiceMean,
}

/// Scores `center` and `n_samples − 1` uniform points of the chart ball
/// `B_ρ(center)` that also lie in the geodesic ball, and returns the lowest
/// score (earliest sample on ties).
pub fn mean_value_pick(
    chart: &MetricChart,
    center: &Vec3,
    rho: f64,
    score: &(dyn Fn(&Vec3) -> Result<f64> + Sync),
    n_samples: usize,
    seed: u64,
    stream: &[u64],
) -> Result<MeanValuePick> {
    mean_value_pick_with(chart, center, rho, score, n_samples, seed, stream, PickRule::Minimize)
}

#[allow(clippy::too_many_arguments)]
pub fn mean_value_pick_with(
    chart: &MetricChart,
    center: &Vec3,
    rho: f64,
    score: &(dyn Fn(&Vec3) -> Result<f64> + Sync),
    n_samples: usize,
    seed: u64,
    stream: &[u64],
    rule: PickRule,
) -> Result<MeanValuePick> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
    }
    for a in 0..3 {
        for s in [-1.0, 1.0] {
            let mut c = *center;
            c[a] += s * rho;
            if !chart.contains(&c) {
                return Err(Error::OutOfDomain { p: c });
            }
        }
    }
    let mut r = rng::stream(seed, stream);
    let mut pts = vec![*center];
    while pts.len() < n_samples.max(1) {
        pts.push(rng::uniform_in_ball(&mut r, center, rho));
    }
    let scored: Vec<Option<(Vec3, f64)>> = pts
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            if k > 0 {
                let d = distance_with(chart, center, p, &DistanceOptions::local()).ok()?.distance;
                if d >= rho {
                    return None;
                }
            }
            score(p).ok().map(|s| (*p, s))
        })
        .collect();
    let kept: Vec<(Vec3, f64)> = scored.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::EmptySample);
    }
    let min = kept.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    let tol = 1e-12 + 1e-9 * min.abs();
    let cut = match rule {
        PickRule::Minimize => min,
        PickRule::TwiceMean => (2.0 * kept.iter().map(|(_, s)| *s).sum::<f64>() / kept.len() as f64).max(min),
    };
    let &(point, s) = kept.iter().find(|(_, s)| *s <= cut + tol).expect("minimum is attained");
    Ok(MeanValuePick { point, score: s, sample_scores: kept.iter().map(|(_, s)| *s).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    /// Mean-value perturbation radius.
    pub rho: f64,
    pub n_samples: usize,
    /// Far-point magnitude along the axis.
    pub far_l: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub z: Vec3,
    pub x_star: Vec3,
    pub far_point: Vec3,
    /// Arclength from `x*` to `z` along the geodesic toward the far point.
    pub s_cross: f64,
    pub path: GeodesicPath,
    pub pick_score: f64,
}

fn far_point(x: &Vec3, axis: usize, sign: f64, l: f64) -> Vec3 {
    let mut q = *x;
    q[axis] = sign * l;
    q
}

/// First point on the geodesic from a perturbed `x*` toward the far point
/// `q±` where `u^i` equals `u^i(y)`.
pub fn level_set_projection(
    chart: &MetricChart,
    triple: &HarmonicTriple,
    x: &Vec3,
    y: &Vec3,
    axis: usize,
    params: &ProjectionParams,
    stream: &[u64],
) -> Result<Projection> {
    let u = &triple.u[axis];
    let ux = u.sample(x).ok_or(Error::OutOfDomain { p: *x })?;
    let c = u.sample(y).ok_or(Error::OutOfDomain { p: *y })?;
    if ux == c {
        return Ok(Projection {
            z: *x,
            x_star: *x,
            far_point: *x,
            s_cross: 0.0,
            path: GeodesicPath::empty(*x),
            pick_score: 0.0,
        });
    }
    // head toward the side of the level set opposite to the start; a
    // perturbed start may sit on the other side of it than x does
    let side = |p: &Vec3| -> Result<f64> {
        let up = u.sample(p).ok_or(Error::OutOfDomain { p: *p })?;
        Ok(if up > c { -1.0 } else { 1.0 })
    };
    let hnorm = hessian_norm_field(triple)?;
    let score = |p: &Vec3| -> Result<f64> {
        let q = far_point(p, axis, side(p)?, params.far_l);
        let r = distance_with(chart, p, &q, &DistanceOptions::local())?;
        segment_functional_sup(&r, &hnorm)
    };
    let pick = mean_value_pick(chart, x, params.rho, &score, params.n_samples, params.seed, stream)?;
    let xs = pick.point;
    let q = far_point(&xs, axis, side(&xs)?, params.far_l);
    let path = distance_with(chart, &xs, &q, &DistanceOptions::local())?.path;
    let val = |s: f64| -> Result<f64> {
        let p = path.point_at(s);
        Ok(u.sample(&p).ok_or(Error::LeftDomain { p })? - c)
    };
    let ds = path.step();
    let mut crossing = None;
    let mut prev = val(0.0)?;
    for k in 1..path.nodes.len() {
        let s = (k as f64 * ds).min(path.length);
        let v = val(s)?;
        if prev == 0.0 {
            crossing = Some((s - ds, s - ds));
            break;
        }
        if prev * v <= 0.0 {
            crossing = Some((s - ds, s));
            break;
        }
        prev = v;
    }
    let (mut lo, mut hi) = crossing.ok_or(Error::NoCrossing)?;
    let mut flo = val(lo)?;
    for _ in 0..200 {
        if hi - lo < 1e-13 * path.length.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = val(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let s_cross = 0.5 * (lo + hi);
    let z = path.point_at(s_cross);
    Ok(Projection {
        z,
        x_star: xs,
        far_point: q,
        s_cross,
        path: path.truncated(s_cross),
        pick_score: pick.score,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PythagoreanRecord {
    pub x: Vec3,
    /// Mean-value perturbed start actually projected (`x` itself when the
    /// score is flat).
    pub x_star: Vec3,
    pub y: Vec3,
    pub z: Vec3,
    pub axis: usize,
    /// `|d(x*,z)² + d(y,z)² − d(x*,y)²|`
    pub defect: f64,
    /// `|d(x*,z) − |u^i(x*) − u^i(z)||`
    pub u_defect_same: f64,
    /// `max_{j≠i} |u^j(x*) − u^j(z)|`
    pub u_defect_cross: f64,
    pub d_xy: f64,
    pub d_xz: f64,
    pub d_yz: f64,
}

pub fn pythagorean_check(
    chart: &MetricChart,
    triple: &HarmonicTriple,
    x: &Vec3,
    y: &Vec3,
    axis: usize,
    params: &ProjectionParams,
    stream: &[u64],
) -> Result<PythagoreanRecord> {
    if x == y {
        return Ok(PythagoreanRecord {
            x: *x,
            x_star: *x,
            y: *y,
            z: *x,
            axis,
            defect: 0.0,
            u_defect_same: 0.0,
            u_defect_cross: 0.0,
            d_xy: 0.0,
            d_xz: 0.0,
            d_yz: 0.0,
        });
    }
    let proj = level_set_projection(chart, triple, x, y, axis, params, stream)?;
    let xs = proj.x_star;
    let z = proj.z;
    let d_xy = distance(chart, &xs, y)?.distance;
    let d_xz = proj.s_cross;
    let d_yz = if (y - z).norm() == 0.0 { 0.0 } else { distance(chart, y, &z)?.distance };
    let ux = triple.map(&xs)?;
    let uz = triple.map(&z)?;
    let cross = (0..3).filter(|&j| j != axis).map(|j| (ux[j] - uz[j]).abs()).fold(0.0, f64::max);
    Ok(PythagoreanRecord {
        x: *x,
        x_star: xs,
        y: *y,
        z,
        axis,
        defect: (d_xz * d_xz + d_yz * d_yz - d_xy * d_xy).abs(),
        u_defect_same: (d_xz - (ux[axis] - uz[axis]).abs()).abs(),
        u_defect_cross: cross,
        d_xy,
        d_xz,
        d_yz,
    })
}
