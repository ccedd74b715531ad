//! Adaptive Dormand–Prince 5(4) integrator with cubic Hermite dense output.

use nalgebra::SVector;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: 1e-2, max_steps: 200_000 }
    }
}

/// Accepted steps: times, states and right-hand sides.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<SVector<f64, D>>,
    pub dy: Vec<SVector<f64, D>>,
}

impl<const D: usize> Trajectory<D> {
    pub fn last(&self) -> &SVector<f64, D> {
        self.y.last().expect("trajectory is never empty")
    }

    /// Cubic Hermite interpolation between accepted steps (clamped to the ends).
    pub fn eval(&self, t: f64) -> SVector<f64, D> {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        self.y[k] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + self.dy[k] * ((s3 - 2.0 * s2 + s) * h)
            + self.y[k + 1] * (-2.0 * s3 + 3.0 * s2)
            + self.dy[k + 1] * ((s3 - s2) * h)
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are A[6]; E = b5 − b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 > t0`).
///
/// Errors from `f` abort the integration and are returned as-is.
pub fn integrate<const D: usize>(
    mut f: impl FnMut(f64, &SVector<f64, D>) -> Result<SVector<f64, D>>,
    t0: f64,
    y0: SVector<f64, D>,
    t1: f64,
    opts: &OdeOptions,
) -> Result<Trajectory<D>> {
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("bad interval [{t0}, {t1}]")));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y)?;
    let mut traj = Trajectory { t: vec![t], y: vec![y], dy: vec![k0] };
    if t1 == t0 {
        return Ok(traj);
    }
    let mut h = opts.h_init.min(t1 - t0);
    let mut steps = 0;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k = [SVector::<f64, D>::zeros(); 7];
        k[0] = k0;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    ys += kj * (h * A[s][j]);
                }
            }
            k[s] = f(t + C[s] * h, &ys)?;
        }
        let mut y_new = y;
        for j in 0..6 {
            y_new += k[j] * (h * A[6][j]);
        }
        let mut err_vec = SVector::<f64, D>::zeros();
        for j in 0..7 {
            err_vec += k[j] * (h * E[j]);
        }
        let mut err = 0.0;
        for d in 0..D {
            let sc = opts.atol + opts.rtol * y[d].abs().max(y_new[d].abs());
            err += (err_vec[d] / sc).powi(2);
        }
        let err = (err / D as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-14 * (t1 - t0) {
                return Err(Error::Integration("non-finite error estimate".into()));
            }
            continue;
        }
        if err <= 1.0 {
            t = if t + h >= t1 { t1 } else { t + h };
            y = y_new;
            k0 = k[6];
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k0);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 * (t1 - t0).max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Ok(traj)
}
