use rayon::prelude::*;

use crate::{Error, Grid, Mat3, MetricChart, Result, Vec3};

/// Conservative second-order discretization of
/// `Δ_g u = (1/√g) ∂_a(√g g^{ab} ∂_b u)` on a grid.
///
/// Conductivities `√g g^{aa}` are sampled at face midpoints, so nodes where
/// the metric is singular (the origin of a monopole chart) still carry a
/// well-defined equation. Off-diagonal conductivities are rejected.
#[derive(Debug, Clone)]
pub struct LaplaceBeltramiOperator {
    pub grid: Grid,
    /// `faces[a][idx]` couples `idx` and `idx + e_a`; unused on the last layer.
    pub faces: [Vec<f64>; 3],
    /// `√det g` at nodes; 0 where the node itself is excised.
    pub node_weight: Vec<f64>,
}

fn conductivity(chart: &MetricChart, x: &Vec3, axis: usize) -> Result<f64> {
    let g = chart.metric_only(x)?;
    let det = g.determinant();
    let inv: Mat3 = g.try_inverse().ok_or(Error::InvalidChart("singular metric".into()))?;
    let a = inv * det.sqrt();
    let diag = a[(axis, axis)];
    for b in 0..3 {
        if b != axis && a[(axis, b)].abs() > 1e-14 * diag.abs() {
            return Err(Error::NonDiagonalMetric { p: *x });
        }
    }
    Ok(diag)
}

pub fn assemble_laplace_beltrami(chart: &MetricChart, grid: &Grid) -> Result<LaplaceBeltramiOperator> {
    if grid.r_out > chart.domain.half_width {
        return Err(Error::OutOfDomain { p: Vec3::repeat(grid.r_out) });
    }
    let n = grid.n;
    let h = grid.h();
    let mut faces: [Vec<f64>; 3] = Default::default();
    for (axis, f) in faces.iter_mut().enumerate() {
        *f = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = grid.ijk(idx);
                if [i, j, k][axis] == n - 1 {
                    return Ok(0.0);
                }
                let mut x = grid.point(i, j, k);
                x[axis] += 0.5 * h;
                conductivity(chart, &x, axis)
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let node_weight = (0..grid.len())
        .into_par_iter()
        .map(|idx| match chart.metric_only(&grid.point_of(idx)) {
            Ok(g) => g.determinant().sqrt(),
            Err(_) => 0.0,
        })
        .collect();
    Ok(LaplaceBeltramiOperator { grid: *grid, faces, node_weight })
}

impl LaplaceBeltramiOperator {
    /// Row `idx` of `K u = −√g Δ_g u` (symmetric positive semidefinite form).
    #[inline]
    pub fn k_row(&self, u: &[f64], idx: usize) -> f64 {
        let g = &self.grid;
        let (i, j, k) = g.ijk(idx);
        let pos = [i, j, k];
        let stride = [1, g.n, g.n * g.n];
        let ui = u[idx];
        let mut acc = 0.0;
        for a in 0..3 {
            if pos[a] + 1 < g.n {
                acc += self.faces[a][idx] * (ui - u[idx + stride[a]]);
            }
            if pos[a] > 0 {
                let nb = idx - stride[a];
                acc += self.faces[a][nb] * (ui - u[nb]);
            }
        }
        acc / (g.h() * g.h())
    }

    /// Diagonal of `K`.
    pub fn k_diag(&self, idx: usize) -> f64 {
        let g = &self.grid;
        let (i, j, k) = g.ijk(idx);
        let pos = [i, j, k];
        let stride = [1, g.n, g.n * g.n];
        let mut acc = 0.0;
        for a in 0..3 {
            if pos[a] + 1 < g.n {
                acc += self.faces[a][idx];
            }
            if pos[a] > 0 {
                acc += self.faces[a][idx - stride[a]];
            }
        }
        acc / (g.h() * g.h())
    }

    /// `out = K u` on interior rows, 0 on boundary rows.
    pub fn apply_k(&self, u: &[f64], out: &mut [f64]) {
        let g = self.grid;
        out.par_iter_mut().enumerate().for_each(|(idx, o)| {
            *o = if g.is_boundary(idx) { 0.0 } else { self.k_row(u, idx) };
        });
    }

    /// Discrete `Δ_g u` at interior nodes with nonzero weight; 0 elsewhere.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let w = self.node_weight[idx];
                if g.is_boundary(idx) || w == 0.0 {
                    0.0
                } else {
                    -self.k_row(u, idx) / w
                }
            })
            .collect()
    }
}
