use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::{assemble_laplace_beltrami, LaplaceBeltramiOperator};
use crate::{stats::pairwise_sum, Error, Grid, MetricChart, Result, ScalarGridField, Vec3};

/// Dirichlet data on the truncation box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPolicy {
    /// `u = x^i`
    #[default]
    Plain,
    /// `u = x^i (1 + c/|x|)` with `c = −A/2` from the monopole coefficient.
    Corrected,
    /// `u = x^i / (1 + A/(2|x|))`: exact for the pure monopole, and equal to
    /// the corrected data up to `O(|x|^{-1})` relative terms.
    Monopole,
}

impl BoundaryPolicy {
    pub fn value(&self, chart: &MetricChart, x: &Vec3, axis: usize) -> f64 {
        match self {
            BoundaryPolicy::Plain => x[axis],
            BoundaryPolicy::Corrected => {
                let c = -0.5 * chart.monopole();
                x[axis] * (1.0 + c / x.norm())
            }
            BoundaryPolicy::Monopole => x[axis] / (1.0 + 0.5 * chart.monopole() / x.norm()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `‖r‖ / ‖b‖` over interior rows.
    pub relative_residual: f64,
}

const CHUNK: usize = 4096;

/// Fixed-chunk dot product; the reduction tree does not depend on the thread count.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    pairwise_sum(&partial)
}

/// Solves `K u = 0` on interior rows with Dirichlet values already present
/// in `u` on the boundary (and used as initial guess inside).
pub fn pcg_solve(op: &LaplaceBeltramiOperator, u: &mut [f64], opts: &SolverOptions) -> Result<SolveStats> {
    let grid = op.grid;
    let len = grid.len();
    let interior: Vec<bool> = (0..len).into_par_iter().map(|i| !grid.is_boundary(i)).collect();

    // b = −K_IB u_B
    let mut ub = u.to_vec();
    ub.par_iter_mut().zip(&interior).for_each(|(v, &int)| {
        if int {
            *v = 0.0
        }
    });
    let mut b = vec![0.0; len];
    op.apply_k(&ub, &mut b);
    let b_norm = dot(&b, &b).sqrt();

    let mut r = vec![0.0; len];
    op.apply_k(u, &mut r);
    r.par_iter_mut().for_each(|v| *v = -*v);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut res = dot(&r, &r).sqrt() / scale;
    if res <= opts.tol {
        return Ok(SolveStats { iterations: 0, relative_residual: res });
    }

    let inv_diag: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|i| if interior[i] { 1.0 / op.k_diag(i) } else { 0.0 })
        .collect();
    let mut z: Vec<f64> = r.par_iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; len];
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        op.apply_k(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::SolverDiverged { iterations: it, residual: res });
        }
        let alpha = rz / pq;
        u.par_iter_mut().zip(&p).for_each(|(x, pi)| *x += alpha * pi);
        r.par_iter_mut().zip(&q).for_each(|(x, qi)| *x -= alpha * qi);
        res = dot(&r, &r).sqrt() / scale;
        if res <= opts.tol {
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
        z.par_iter_mut().zip(r.par_iter().zip(&inv_diag)).for_each(|(zi, (ri, d))| *zi = ri * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::SolverDiverged { iterations: opts.max_iter, residual: res })
}

/// Dirichlet field for `axis` (0-based) on the whole grid.
pub fn boundary_field(chart: &MetricChart, grid: &Grid, axis: usize, bc: BoundaryPolicy) -> ScalarGridField {
    ScalarGridField::from_fn(*grid, |x| {
        if x.norm() == 0.0 {
            0.0
        } else {
            bc.value(chart, &x, axis)
        }
    })
}

/// Solves for the harmonic coordinate asymptotic to `x^{axis+1}`.
pub fn solve_harmonic_coordinate(
    chart: &MetricChart,
    grid: &Grid,
    axis: usize,
    bc: BoundaryPolicy,
    opts: &SolverOptions,
) -> Result<(ScalarGridField, SolveStats)> {
    let op = assemble_laplace_beltrami(chart, grid)?;
    solve_with_operator(&op, chart, axis, bc, opts)
}

pub fn solve_with_operator(
    op: &LaplaceBeltramiOperator,
    chart: &MetricChart,
    axis: usize,
    bc: BoundaryPolicy,
    opts: &SolverOptions,
) -> Result<(ScalarGridField, SolveStats)> {
    if axis > 2 {
        return Err(Error::InvalidArgument(format!("axis index {axis} not in 0..3")));
    }
    let mut field = boundary_field(chart, &op.grid, axis, bc);
    let stats = pcg_solve(op, &mut field.values, opts)?;
    Ok((field, stats))
}
