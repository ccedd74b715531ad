use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::ode::{integrate, OdeOptions, Trajectory};
use crate::{Error, MetricChart, Result, Vec3};

/// How a path was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathMethod {
    Shooting,
    GraphSeedShooting,
}

/// Unit-speed geodesic sampled at equal arclength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub nodes: Vec<Vec3>,
    /// Chart velocities at the nodes (unit g-length).
    pub tangents: Vec<Vec3>,
    pub length: f64,
    /// Chart distance from the last node to the requested target (0 for
    /// initial-value shots).
    pub endpoint_residual: f64,
    pub method: PathMethod,
    /// `max | |ẋ|_g − 1 |` over accepted integrator steps.
    pub speed_drift: f64,
}

impl GeodesicPath {
    pub fn empty(at: Vec3) -> Self {
        GeodesicPath {
            nodes: vec![at],
            tangents: vec![Vec3::zeros()],
            length: 0.0,
            endpoint_residual: 0.0,
            method: PathMethod::Shooting,
            speed_drift: 0.0,
        }
    }

    pub fn step(&self) -> f64 {
        if self.nodes.len() < 2 {
            0.0
        } else {
            self.length / (self.nodes.len() - 1) as f64
        }
    }

    pub fn start(&self) -> Vec3 {
        self.nodes[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.nodes.last().expect("paths have at least one node")
    }

    /// Cubic Hermite position at arclength `s ∈ [0, length]`.
    pub fn point_at(&self, s: f64) -> Vec3 {
        let n = self.nodes.len();
        if n < 2 || s <= 0.0 {
            return self.nodes[0];
        }
        if s >= self.length {
            return self.end();
        }
        let ds = self.step();
        let k = ((s / ds).floor() as usize).min(n - 2);
        let t = s / ds - k as f64;
        let (t2, t3) = (t * t, t * t * t);
        self.nodes[k] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + self.tangents[k] * ((t3 - 2.0 * t2 + t) * ds)
            + self.nodes[k + 1] * (-2.0 * t3 + 3.0 * t2)
            + self.tangents[k + 1] * ((t3 - t2) * ds)
    }

    /// Sub-path on `[0, s]`, resampled.
    pub fn truncated(&self, s: f64) -> GeodesicPath {
        let s = s.clamp(0.0, self.length);
        let n = nodes_for(s);
        let (nodes, tangents) = (0..=n)
            .map(|k| {
                let t = s * k as f64 / n as f64;
                (self.point_at(t), self.tangent_at(t))
            })
            .unzip();
        GeodesicPath { nodes, tangents, length: s, endpoint_residual: 0.0, ..self.clone() }
    }

    fn tangent_at(&self, s: f64) -> Vec3 {
        let n = self.nodes.len();
        if n < 2 {
            return self.tangents[0];
        }
        let ds = self.step();
        let k = ((s / ds).floor().max(0.0) as usize).min(n - 2);
        let t = (s / ds - k as f64).clamp(0.0, 1.0);
        self.tangents[k] * (1.0 - t) + self.tangents[k + 1] * t
    }
}

/// Even number of uniform intervals, about 0.02 chart units apart.
pub(crate) fn nodes_for(length: f64) -> usize {
    let n = (length / 0.02).ceil() as usize;
    (n.max(16) + 1) / 2 * 2
}

pub(crate) type State = SVector<f64, 6>;

fn map_domain(e: Error) -> Error {
    match e {
        Error::OutOfDomain { p } => Error::LeftDomain { p },
        other => other,
    }
}

/// `(ẋ, −Γ(ẋ, ẋ))`
pub(crate) fn geodesic_rhs(chart: &MetricChart, y: &State) -> Result<State> {
    let x = Vec3::new(y[0], y[1], y[2]);
    let v = Vec3::new(y[3], y[4], y[5]);
    let gamma = chart.christoffel_at(&x).map_err(map_domain)?;
    let mut out = State::zeros();
    for k in 0..3 {
        out[k] = v[k];
        out[3 + k] = -(v.transpose() * gamma[k] * v)[(0, 0)];
    }
    Ok(out)
}

pub(crate) fn state(x: &Vec3, v: &Vec3) -> State {
    State::from_column_slice(&[x[0], x[1], x[2], v[0], v[1], v[2]])
}

pub(crate) fn split(y: &State) -> (Vec3, Vec3) {
    (Vec3::new(y[0], y[1], y[2]), Vec3::new(y[3], y[4], y[5]))
}

pub(crate) fn g_norm(chart: &MetricChart, x: &Vec3, v: &Vec3) -> Result<f64> {
    let g = chart.metric_only(x).map_err(map_domain)?;
    Ok((v.transpose() * g * v)[(0, 0)].sqrt())
}

pub(crate) const SHOOT_OPTS: OdeOptions = OdeOptions { rtol: 1e-11, atol: 1e-13, h_init: 1e-2, max_steps: 400_000 };

pub(crate) fn integrate_geodesic(
    chart: &MetricChart,
    x0: &Vec3,
    v0: &Vec3,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Trajectory<6>> {
    chart.check_point(x0).map_err(map_domain)?;
    integrate(|_, y| geodesic_rhs(chart, y), 0.0, state(x0, v0), t_end, opts)
}

/// Geodesic with unit initial velocity `v0` followed for arclength `length`.
pub fn shoot_geodesic(chart: &MetricChart, x0: &Vec3, v0: &Vec3, length: f64) -> Result<GeodesicPath> {
    shoot_with(chart, x0, v0, length, &SHOOT_OPTS)
}

pub fn shoot_with(chart: &MetricChart, x0: &Vec3, v0: &Vec3, length: f64, opts: &OdeOptions) -> Result<GeodesicPath> {
    if !(length >= 0.0) {
        return Err(Error::InvalidArgument(format!("length must be ≥ 0, got {length}")));
    }
    let speed = g_norm(chart, x0, v0)?;
    if (speed - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("initial velocity has g-norm {speed}, expected 1")));
    }
    let traj = integrate_geodesic(chart, x0, v0, length, opts)?;
    let mut drift: f64 = 0.0;
    for y in &traj.y {
        let (x, v) = split(y);
        drift = drift.max((g_norm(chart, &x, &v)? - 1.0).abs());
    }
    let n = nodes_for(length);
    let (nodes, tangents) = (0..=n)
        .map(|k| split(&traj.eval(length * k as f64 / n as f64)))
        .unzip();
    Ok(GeodesicPath {
        nodes,
        tangents,
        length,
        endpoint_residual: 0.0,
        method: PathMethod::Shooting,
        speed_drift: drift,
    })
}
