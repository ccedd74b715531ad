use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::graph::graph_distance;
use super::shoot::{g_norm, integrate_geodesic, shoot_with, split, GeodesicPath, PathMethod, SHOOT_OPTS};
use crate::{Error, MetricChart, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    /// Seed an extra candidate (and an upper bound) from a lattice shortest path.
    pub graph_seed: bool,
    pub graph_nodes_per_axis: usize,
    pub max_newton: usize,
    /// Endpoint residual target relative to the distance.
    pub rel_tol: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions { graph_seed: true, graph_nodes_per_axis: 11, max_newton: 40, rel_tol: 1e-9 }
    }
}

impl DistanceOptions {
    /// Straight-line seed only; for short hops inside small balls.
    pub fn local() -> Self {
        DistanceOptions { graph_seed: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: f64,
    pub path: GeodesicPath,
    /// Other converged candidates of the same length (within 1e−8).
    pub alternates: Vec<GeodesicPath>,
    pub graph_upper_bound: Option<f64>,
}

/// Endpoint of the affinely parametrized geodesic on `[0, 1]` from `x`.
fn endpoint(chart: &MetricChart, x: &Vec3, w: &Vec3) -> Result<Vec3> {
    let tr = integrate_geodesic(chart, x, w, 1.0, &SHOOT_OPTS)?;
    Ok(split(tr.last()).0)
}

/// Newton on `w ↦ exp_x(w) − y` with a forward-difference Jacobian and
/// backtracking on the residual.
fn newton(chart: &MetricChart, x: &Vec3, y: &Vec3, w0: Vec3, opts: &DistanceOptions) -> Option<Vec3> {
    let scale = (y - x).norm().max(1e-300);
    let mut w = w0;
    let mut f = endpoint(chart, x, &w).ok()? - y;
    for _ in 0..opts.max_newton {
        if f.norm() <= opts.rel_tol * scale {
            return Some(w);
        }
        let eps = 1e-7 * w.norm().max(1e-3);
        let mut jac = Matrix3::zeros();
        for a in 0..3 {
            let mut wp = w;
            wp[a] += eps;
            let fp = endpoint(chart, x, &wp).ok()? - y;
            jac.set_column(a, &((fp - f) / eps));
        }
        let dw = jac.lu().solve(&(-f))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let wn = w + dw * lambda;
            if let Ok(e) = endpoint(chart, x, &wn) {
                let fn_ = e - y;
                if fn_.norm() < f.norm() {
                    w = wn;
                    f = fn_;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (f.norm() <= opts.rel_tol * scale).then_some(w)
}

fn candidate(chart: &MetricChart, x: &Vec3, y: &Vec3, w0: Vec3, method: PathMethod, opts: &DistanceOptions) -> Option<GeodesicPath> {
    let w = newton(chart, x, y, w0, opts)?;
    let len = g_norm(chart, x, &w).ok()?;
    let mut p = shoot_with(chart, x, &(w / len), len, &SHOOT_OPTS).ok()?;
    p.endpoint_residual = (p.end() - y).norm();
    p.method = method;
    Some(p)
}

/// Geodesic distance by shooting from `x`, seeded by the chart segment and
/// optionally a lattice shortest path; returns the shortest converged path.
pub fn distance(chart: &MetricChart, x: &Vec3, y: &Vec3) -> Result<DistanceResult> {
    distance_with(chart, x, y, &DistanceOptions::default())
}

pub fn distance_with(chart: &MetricChart, x: &Vec3, y: &Vec3, opts: &DistanceOptions) -> Result<DistanceResult> {
    chart.check_point(x)?;
    chart.check_point(y)?;
    if x == y {
        return Ok(DistanceResult {
            distance: 0.0,
            path: GeodesicPath::empty(*x),
            alternates: Vec::new(),
            graph_upper_bound: Some(0.0),
        });
    }
    let mut cands = Vec::new();
    if let Some(p) = candidate(chart, x, y, y - x, PathMethod::Shooting, opts) {
        cands.push(p);
    }
    let mut bound = None;
    let want_graph = opts.graph_seed || cands.is_empty();
    if want_graph {
        if let Some((gd, poly)) = graph_distance(chart, x, y, opts.graph_nodes_per_axis) {
            bound = Some(gd);
            let dir = poly[1] - poly[0];
            let straight = (y - x).normalize();
            if dir.normalize().dot(&straight) < 1.0 - 1e-9 {
                if let Ok(n) = g_norm(chart, x, &dir) {
                    let w0 = dir / n * gd;
                    if let Some(p) = candidate(chart, x, y, w0, PathMethod::GraphSeedShooting, opts) {
                        cands.push(p);
                    }
                }
            }
        }
    }
    if cands.is_empty() {
        return Err(Error::NoConvergence { graph_upper_bound: bound.unwrap_or(f64::INFINITY) });
    }
    cands.sort_by(|a, b| a.length.total_cmp(&b.length));
    let best = cands.remove(0);
    let alternates = cands
        .into_iter()
        .filter(|c| (c.length - best.length).abs() < 1e-8 && (c.point_at(0.5 * c.length) - best.point_at(0.5 * best.length)).norm() > 1e-6)
        .collect();
    Ok(DistanceResult { distance: best.length, path: best, alternates, graph_upper_bound: bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_pythagorean_triple() {
        let chart = MetricChart::flat(10.0);
        let r = distance(&chart, &Vec3::zeros(), &Vec3::new(3.0, 4.0, 0.0)).unwrap();
        assert!((r.distance - 5.0).abs() < 1e-10);
        assert!(r.path.endpoint_residual < 1e-9);
    }

    #[test]
    fn radial_schwarzschild_closed_form() {
        let m = 0.2;
        let chart = MetricChart::schwarzschild(m, 20.0).unwrap();
        let r = distance(&chart, &Vec3::new(2.0, 0.0, 0.0), &Vec3::new(5.0, 0.0, 0.0)).unwrap();
        let exact = 3.0 + m * (5.0f64 / 2.0).ln() + m * m / 4.0 * (0.5 - 0.2);
        assert!((exact - 3.186258).abs() < 1e-6);
        assert!((r.distance - exact).abs() < 1e-8, "{} vs {exact}", r.distance);
        assert!(r.distance <= r.graph_upper_bound.unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn symmetric_and_below_graph_bound() {
        let chart = MetricChart::schwarzschild(0.2, 20.0).unwrap();
        let x = Vec3::new(2.0, 1.0, -0.5);
        let y = Vec3::new(-1.0, 2.5, 1.0);
        let a = distance(&chart, &x, &y).unwrap();
        let b = distance(&chart, &y, &x).unwrap();
        assert!((a.distance - b.distance).abs() < 1e-8);
        assert!(a.distance <= a.graph_upper_bound.unwrap());
        assert!(a.path.endpoint_residual < 1e-6 * a.distance);
    }

    #[test]
    fn degenerate_pair() {
        let chart = MetricChart::flat(10.0);
        let r = distance(&chart, &Vec3::new(1.0, 1.0, 1.0), &Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(r.distance, 0.0);
    }
}
