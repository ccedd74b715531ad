use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assembly::{assemble_laplace_beltrami, LaplaceBeltramiOperator};
use super::solver::{solve_with_operator, BoundaryPolicy, SolveStats, SolverOptions};
use crate::{
    stats::pairwise_sum, Error, Grid, Mat3, MetricChart, Result, ScalarGridField, SymmetricGridField, Vec3,
    VectorGridField,
};

/// Node lies within two layers of the box boundary (one-sided stencils).
pub const FLAG_BOUNDARY_BAND: u8 = 1;
/// Metric is singular or excised at the node.
pub const FLAG_EXCISED: u8 = 2;

/// How the additive constant of each `u^i` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalization {
    /// `u^i(p) = 0` at the chart base point.
    #[default]
    BasePoint,
    /// Zero `√g`-weighted average over the coordinate annulus `r0 < |x| < r1`.
    AnnulusAverage { r0: f64, r1: f64 },
}

#[derive(Debug, Clone)]
pub struct HarmonicTriple {
    pub grid: Grid,
    pub chart: MetricChart,
    pub bc: BoundaryPolicy,
    pub normalization: Normalization,
    pub u: [ScalarGridField; 3],
    /// Coordinate partials `∂_a u^i`.
    pub du: [VectorGridField; 3],
    /// `g^{ab} ∂_b u^i`.
    pub grad: [VectorGridField; 3],
    /// `∂_a∂_b u − Γ^k_ab ∂_k u`.
    pub hess: [SymmetricGridField; 3],
    pub flags: Vec<u8>,
    pub residual_norm: [f64; 3],
    pub iterations: [usize; 3],
    /// Constants subtracted by the normalization.
    pub offsets: [f64; 3],
    /// `∫|Δ_g u^i| dV` of the discrete operator over interior nodes.
    pub divergence_l1: [f64; 3],
}

#[inline]
fn stride(grid: &Grid, axis: usize) -> usize {
    [1, grid.n, grid.n * grid.n][axis]
}

#[inline]
fn pos(grid: &Grid, idx: usize, axis: usize) -> usize {
    let (i, j, k) = grid.ijk(idx);
    [i, j, k][axis]
}

/// `∂_axis` with 4th-order central stencils, 2nd-order next to the boundary
/// and one-sided 2nd-order on it.
pub fn first_derivative(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.h();
    let s = stride(grid, axis);
    let last = grid.n - 1;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = pos(grid, idx, axis);
            if p == 0 {
                (-3.0 * v[idx] + 4.0 * v[idx + s] - v[idx + 2 * s]) / (2.0 * h)
            } else if p == last {
                (3.0 * v[idx] - 4.0 * v[idx - s] + v[idx - 2 * s]) / (2.0 * h)
            } else if p == 1 || p == last - 1 {
                (v[idx + s] - v[idx - s]) / (2.0 * h)
            } else {
                (8.0 * (v[idx + s] - v[idx - s]) - (v[idx + 2 * s] - v[idx - 2 * s])) / (12.0 * h)
            }
        })
        .collect()
}

/// `∂²_axis` with the same stencil layering as [`first_derivative`].
pub fn second_derivative(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let h2 = grid.h() * grid.h();
    let s = stride(grid, axis);
    let last = grid.n - 1;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = pos(grid, idx, axis);
            if p == 0 {
                (2.0 * v[idx] - 5.0 * v[idx + s] + 4.0 * v[idx + 2 * s] - v[idx + 3 * s]) / h2
            } else if p == last {
                (2.0 * v[idx] - 5.0 * v[idx - s] + 4.0 * v[idx - 2 * s] - v[idx - 3 * s]) / h2
            } else if p == 1 || p == last - 1 {
                (v[idx + s] - 2.0 * v[idx] + v[idx - s]) / h2
            } else {
                (-(v[idx + 2 * s] + v[idx - 2 * s]) + 16.0 * (v[idx + s] + v[idx - s]) - 30.0 * v[idx])
                    / (12.0 * h2)
            }
        })
        .collect()
}

struct Derived {
    du: VectorGridField,
    grad: VectorGridField,
    hess: SymmetricGridField,
}

fn derive(chart: &MetricChart, grid: &Grid, u: &[f64], flags: &[u8]) -> Derived {
    let d: [Vec<f64>; 3] = std::array::from_fn(|a| first_derivative(grid, u, a));
    let dd: [Vec<f64>; 3] = std::array::from_fn(|a| second_derivative(grid, u, a));
    // the mixed partials commute exactly as operators; average the two orders
    // so round-off cannot break symmetry either
    let mixed = |a: usize, b: usize| -> Vec<f64> {
        let ab = first_derivative(grid, &d[b], a);
        let ba = first_derivative(grid, &d[a], b);
        ab.iter().zip(&ba).map(|(x, y)| 0.5 * (x + y)).collect()
    };
    let (dxy, dxz, dyz) = (mixed(0, 1), mixed(0, 2), mixed(1, 2));
    let rows: Vec<([f64; 3], [f64; 3], [f64; 6])> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let du = Vec3::new(d[0][idx], d[1][idx], d[2][idx]);
            if flags[idx] & FLAG_EXCISED != 0 {
                return (du.into(), [0.0; 3], [0.0; 6]);
            }
            let x = grid.point_of(idx);
            let (Ok(m), Ok(gamma)) = (chart.metric_only(&x), chart.christoffel_at(&x)) else {
                return (du.into(), [0.0; 3], [0.0; 6]);
            };
            let g_inv = m.try_inverse().unwrap_or_else(Mat3::zeros);
            let grad = g_inv * du;
            let mut hm = Mat3::new(
                dd[0][idx], dxy[idx], dxz[idx], dxy[idx], dd[1][idx], dyz[idx], dxz[idx], dyz[idx], dd[2][idx],
            );
            for (k, gk) in gamma.iter().enumerate() {
                hm -= gk * du[k];
            }
            let packed = SymmetricGridField::pack(&(0.5 * (hm + hm.transpose())));
            (du.into(), grad.into(), packed)
        })
        .collect();
    let mut out = Derived {
        du: VectorGridField::zeros(*grid),
        grad: VectorGridField::zeros(*grid),
        hess: SymmetricGridField::zeros(*grid),
    };
    for (idx, (a, b, c)) in rows.into_iter().enumerate() {
        out.du.values[idx] = a;
        out.grad.values[idx] = b;
        out.hess.values[idx] = c;
    }
    out
}

fn node_flags(op: &LaplaceBeltramiOperator) -> Vec<u8> {
    let grid = op.grid;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let mut f = 0;
            if grid.depth(idx) < 2 {
                f |= FLAG_BOUNDARY_BAND;
            }
            if op.node_weight[idx] == 0.0 {
                f |= FLAG_EXCISED;
            }
            f
        })
        .collect()
}

fn normalization_offset(
    op: &LaplaceBeltramiOperator,
    chart: &MetricChart,
    u: &ScalarGridField,
    norm: Normalization,
) -> Result<f64> {
    match norm {
        Normalization::BasePoint => {
            let p = chart.base_point;
            u.sample(&p).ok_or(Error::OutOfDomain { p })
        }
        Normalization::AnnulusAverage { r0, r1 } => {
            if !(r1 > r0 && r0 >= 0.0) {
                return Err(Error::InvalidArgument(format!("annulus ({r0}, {r1}) is empty")));
            }
            let grid = op.grid;
            let (num, den): (Vec<f64>, Vec<f64>) = (0..grid.len())
                .map(|i| {
                    let r = grid.point_of(i).norm();
                    let w = op.node_weight[i];
                    if r > r0 && r < r1 && w > 0.0 {
                        (w * u.values[i], w)
                    } else {
                        (0.0, 0.0)
                    }
                })
                .unzip();
            let den = pairwise_sum(&den);
            if den == 0.0 {
                return Err(Error::EmptySample);
            }
            Ok(pairwise_sum(&num) / den)
        }
    }
}

/// Solves all three coordinates and builds the derived fields.
pub fn build_harmonic_triple(
    chart: &MetricChart,
    grid: &Grid,
    bc: BoundaryPolicy,
    normalization: Normalization,
    opts: &SolverOptions,
) -> Result<HarmonicTriple> {
    let op = assemble_laplace_beltrami(chart, grid)?;
    let flags = node_flags(&op);
    let solved: Vec<(ScalarGridField, SolveStats)> =
        (0..3).map(|a| solve_with_operator(&op, chart, a, bc, opts)).collect::<Result<_>>()?;
    let h3 = grid.h().powi(3);
    let mut u: Vec<ScalarGridField> = Vec::with_capacity(3);
    let mut offsets = [0.0; 3];
    let mut residual_norm = [0.0; 3];
    let mut iterations = [0; 3];
    let mut divergence_l1 = [0.0; 3];
    for (a, (mut f, st)) in solved.into_iter().enumerate() {
        let lap = op.apply(&f.values);
        let terms: Vec<f64> =
            lap.iter().zip(&op.node_weight).map(|(l, w)| l.abs() * w * h3).collect();
        divergence_l1[a] = pairwise_sum(&terms);
        let off = normalization_offset(&op, chart, &f, normalization)?;
        f.values.par_iter_mut().for_each(|v| *v -= off);
        offsets[a] = off;
        residual_norm[a] = st.relative_residual;
        iterations[a] = st.iterations;
        u.push(f);
    }
    let derived: Vec<Derived> = u.iter().map(|f| derive(chart, grid, &f.values, &flags)).collect();
    let mut it = derived.into_iter();
    let (d0, d1, d2) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    let u: [ScalarGridField; 3] = u.try_into().expect("three axes");
    Ok(HarmonicTriple {
        grid: *grid,
        chart: chart.clone(),
        bc,
        normalization,
        u,
        du: [d0.du, d1.du, d2.du],
        grad: [d0.grad, d1.grad, d2.grad],
        hess: [d0.hess, d1.hess, d2.hess],
        flags,
        residual_norm,
        iterations,
        offsets,
        divergence_l1,
    })
}

impl HarmonicTriple {
    /// `u(x) = (u¹, u², u³)(x)` by trilinear interpolation.
    pub fn map(&self, x: &Vec3) -> Result<Vec3> {
        let mut out = Vec3::zeros();
        for a in 0..3 {
            out[a] = self.u[a].sample(x).ok_or(Error::OutOfDomain { p: *x })?;
        }
        Ok(out)
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.flags[idx] == 0
    }

    /// A cell is usable for integrals when none of its corners is flagged.
    pub fn cell_valid(&self, i: usize, j: usize, k: usize) -> bool {
        self.grid.cell_corners(i, j, k).iter().all(|&c| self.flags[c] == 0)
    }

    /// `sup |∇u|_g` over unflagged nodes.
    pub fn grad_sup(&self, axis: usize) -> Result<f64> {
        let vals: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .filter(|&i| self.is_valid(i))
            .map(|i| {
                let x = self.grid.point_of(i);
                let g = self.chart.metric_only(&x)?;
                let v = self.grad[axis].at(i);
                Ok((v.transpose() * g * v)[(0, 0)].sqrt())
            })
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// `sup_{B_r(p)} |∇u|_g / sup_{B_{2r}(p)} |u − u(p)|` over coordinate balls.
    pub fn cheng_yau_ratio(&self, axis: usize, r: f64) -> Result<f64> {
        let p = self.chart.base_point;
        let up = self.u[axis].sample(&p).ok_or(Error::OutOfDomain { p })?;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..self.grid.len() {
            if !self.is_valid(i) {
                continue;
            }
            let x = self.grid.point_of(i);
            let d = (x - p).norm();
            if d < r {
                let g = self.chart.metric_only(&x)?;
                let v = self.grad[axis].at(i);
                num = num.max((v.transpose() * g * v)[(0, 0)].sqrt());
            }
            if d < 2.0 * r {
                den = den.max((self.u[axis].values[i] - up).abs());
            }
        }
        if den == 0.0 {
            return Err(Error::EmptySample);
        }
        Ok(num / den)
    }

    /// Largest asymmetry `|H − Hᵀ|` over stored Hessians (zero by construction).
    pub fn hessian_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.hess {
            for v in &h.values {
                let m = SymmetricGridField::unpack(v);
                worst = worst.max((m - m.transpose()).abs().max());
            }
        }
        worst
    }
}
