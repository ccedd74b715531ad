use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geodesy::{distance_with, DistanceField, DistanceOptions};
use crate::harmonic::HarmonicTriple;
use crate::{rng, stats, Error, MetricChart, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub r: f64,
    pub n_pairs: usize,
    /// Pairs dropped because the distance solve failed.
    pub n_failed: usize,
    pub max_defect: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    /// `∫_{B_r(p)} Σ_ij |⟨∇u^i, ∇u^j⟩ − δ^ij| dV`
    pub ortho_l1: f64,
    /// One-sided coverage distance from the flow construction, when run.
    pub image_hausdorff: Option<f64>,
    /// `max (|u(x)| − sup|∇u| · d(p, x))` over sampled points (≤ 0 expected).
    pub centering_excess: f64,
    /// `max (|u(x)| − r − max_defect)` over sampled points (≤ 0 expected).
    pub containment_excess: f64,
}

/// Smallest metric stretch `min √λ(g)` near `p`, used to size chart balls
/// that contain geodesic balls.
pub(crate) fn min_stretch(chart: &MetricChart, p: &Vec3, radius: f64) -> f64 {
    let mut s = f64::INFINITY;
    for k in -3..=3 {
        for j in -3..=3 {
            for i in -3..=3 {
                let x = p + Vec3::new(i as f64, j as f64, k as f64) * (radius / 3.0);
                if let Ok(g) = chart.metric_only(&x) {
                    s = s.min(g.symmetric_eigenvalues().min().sqrt());
                }
            }
        }
    }
    s.min(1.0)
}

/// Points of the geodesic ball `B_r(p)` by rejection from the enclosing chart
/// ball; returns `(x, d(p, x))` in draw order.
pub fn sample_geodesic_ball(
    chart: &MetricChart,
    p: &Vec3,
    r: f64,
    count: usize,
    seed: u64,
    stream: &[u64],
) -> Result<Vec<(Vec3, f64)>> {
    let chart_r = r / min_stretch(chart, p, 2.0 * r);
    let mut rng = rng::stream(seed, stream);
    let mut out = Vec::with_capacity(count);
    let batch = 64;
    let mut attempts = 0;
    while out.len() < count {
        let cands: Vec<Vec3> = (0..batch).map(|_| rng::uniform_in_ball(&mut rng, p, chart_r)).collect();
        let kept: Vec<Option<(Vec3, f64)>> = cands
            .par_iter()
            .map(|x| {
                if chart.check_point(x).is_err() {
                    return None;
                }
                let d = distance_with(chart, p, x, &DistanceOptions::local()).ok()?.distance;
                (d < r).then_some((*x, d))
            })
            .collect();
        out.extend(kept.into_iter().flatten().take(count - out.len()));
        attempts += batch;
        if attempts > 200 * count.max(1) {
            return Err(Error::EmptySample);
        }
    }
    Ok(out)
}

/// `Σ_ij |⟨∇u^i, ∇u^j⟩_g − δ^ij|` at node `idx`.
pub(crate) fn ortho_defect_at_node(triple: &HarmonicTriple, idx: usize) -> Result<f64> {
    let g = triple.chart.metric_only(&triple.grid.point_of(idx))?;
    let v: [Vec3; 3] = std::array::from_fn(|a| triple.grad[a].at(idx));
    Ok(ortho_defect(&g, &v))
}

pub(crate) fn ortho_defect(g: &crate::Mat3, v: &[Vec3; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let ip = (v[i].transpose() * g * v[j])[(0, 0)];
            acc += (ip - if i == j { 1.0 } else { 0.0 }).abs();
        }
    }
    acc
}

/// `∫_{B_r(p)} Σ_ij |⟨∇u^i,∇u^j⟩ − δ^ij| dV` over unflagged cells whose
/// center is within fast-marching distance `r` of `p`.
pub fn ortho_l1(triple: &HarmonicTriple, r: f64) -> Result<f64> {
    let chart = &triple.chart;
    let p = chart.base_point;
    let grid = triple.grid;
    let half = (1.2 * r / min_stretch(chart, &p, 2.0 * r)).min(grid.r_out);
    let n = (((2.0 * half / grid.h()) * 2.0).ceil() as usize).max(21) | 1;
    let field = DistanceField::build(chart, &p, half, n)?;
    let node_defect: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| if triple.is_valid(i) { ortho_defect_at_node(triple, i) } else { Ok(0.0) })
        .collect::<Result<_>>()?;
    let h3 = grid.h().powi(3);
    let terms: Vec<f64> = (0..grid.n_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j, k) = grid.cell_ijk(c);
            let x = grid.cell_center(i, j, k);
            if (x - p).amax() > half || !triple.cell_valid(i, j, k) {
                return Ok(0.0);
            }
            match field.sample(&x) {
                Some(d) if d < r => {}
                _ => return Ok(0.0),
            }
            let avg: f64 = grid.cell_corners(i, j, k).iter().map(|&q| node_defect[q]).sum::<f64>() / 8.0;
            Ok(avg * chart.metric_only(&x)?.determinant().sqrt() * h3)
        })
        .collect::<Result<_>>()?;
    Ok(stats::pairwise_sum(&terms))
}

/// Distortion of `u` on `B_r(p)` over `n_pairs` seeded pairs.
pub fn gh_distortion(
    chart: &MetricChart,
    triple: &HarmonicTriple,
    r: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<DistortionReport> {
    if triple.chart != *chart {
        return Err(Error::MismatchedChart);
    }
    let p = chart.base_point;
    let pts = sample_geodesic_ball(chart, &p, r, 2 * n_pairs, seed, &[0xD15])?;
    let grad_sup = (0..3).map(|a| triple.grad_sup(a)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let images: Vec<Vec3> = pts.iter().map(|(x, _)| triple.map(x)).collect::<Result<_>>()?;
    let centering = pts
        .iter()
        .zip(&images)
        .map(|((_, d), u)| u.norm() - grad_sup * d)
        .fold(f64::NEG_INFINITY, f64::max);
    let defects: Vec<Option<f64>> = (0..n_pairs)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (pts[2 * k].0, pts[2 * k + 1].0);
            let d = distance_with(chart, &x, &y, &DistanceOptions::default()).ok()?.distance;
            Some((d - (images[2 * k] - images[2 * k + 1]).norm()).abs())
        })
        .collect();
    let n_failed = defects.iter().filter(|d| d.is_none()).count();
    let ok: Vec<f64> = defects.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = stats::sorted(&ok);
    let max_defect = *s.last().unwrap();
    let containment = images.iter().map(|u| u.norm() - r - max_defect).fold(f64::NEG_INFINITY, f64::max);
    Ok(DistortionReport {
        r,
        n_pairs,
        n_failed,
        max_defect,
        p50: stats::quantile_sorted(&s, 0.5),
        p90: stats::quantile_sorted(&s, 0.9),
        p99: stats::quantile_sorted(&s, 0.99),
        ortho_l1: ortho_l1(triple, r)?,
        image_hausdorff: None,
        centering_excess: centering,
        containment_excess: containment,
    })
}
