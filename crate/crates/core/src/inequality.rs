//! Mass-inequality integrand, L² Hessian bound, refined Kato check and the
//! relaxed scalar-curvature certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{christoffel, Bump};
use crate::harmonic::{first_derivative, HarmonicTriple};
use crate::{stats, Error, Grid, Mat3, MetricChart, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub axis: usize,
    pub mass: f64,
    /// `(1/16π) ∫ (|∇²u|²/|∇u| + R|∇u|) dV` over unexcluded cells.
    pub rhs_integral: f64,
    /// `∫ |∇²u|² dV`
    pub hessian_l2: f64,
    pub grad_sup: f64,
    pub slack: f64,
    /// Absolute floor on `|∇u|` actually applied.
    pub eps_grad: f64,
    pub excluded_fraction: f64,
    /// Smallest pointwise value of `|∇²u|²/|∇u|` (nonnegative by construction
    /// of the norm, recorded as a sanity probe).
    pub min_hessian_term: f64,
}

struct CellValues {
    vol: f64,
    hess_sq: f64,
    grad_norm: f64,
    scalar: f64,
}

fn cell_values(t: &HarmonicTriple, chart: &MetricChart, axis: usize, c: usize) -> Result<Option<CellValues>> {
    let grid = &t.grid;
    let (i, j, k) = grid.cell_ijk(c);
    if !t.cell_valid(i, j, k) {
        return Ok(None);
    }
    let corners = grid.cell_corners(i, j, k);
    let mut du = Vec3::zeros();
    let mut h = Mat3::zeros();
    for &n in &corners {
        du += t.du[axis].at(n);
        h += t.hess[axis].at(n);
    }
    du /= 8.0;
    h /= 8.0;
    let x = grid.cell_center(i, j, k);
    let cs = chart.curvature_at(&x)?;
    let g = chart.metric_only(&x)?;
    let g_inv = g.try_inverse().ok_or(Error::InvalidChart("singular metric".into()))?;
    let hu = g_inv * h;
    Ok(Some(CellValues {
        vol: g.determinant().sqrt() * grid.h().powi(3),
        hess_sq: (hu * hu).trace(),
        grad_norm: (du.transpose() * g_inv * du)[(0, 0)].sqrt(),
        scalar: cs.scalar,
    }))
}

fn total_volume(chart: &MetricChart, grid: &Grid) -> Result<f64> {
    let v: Vec<f64> = (0..grid.n_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j, k) = grid.cell_ijk(c);
            Ok(chart.metric_only(&grid.cell_center(i, j, k))?.determinant().sqrt() * grid.h().powi(3))
        })
        .collect::<Result<_>>()?;
    Ok(stats::pairwise_sum(&v))
}

/// Evaluates the mass-inequality integrand for `u^{axis+1}`. `eps_grad_rel`
/// is relative to `sup |∇u|`.
pub fn mass_inequality_rhs(
    triple: &HarmonicTriple,
    chart: &MetricChart,
    axis: usize,
    eps_grad_rel: f64,
    mass: f64,
) -> Result<InequalityReport> {
    if triple.chart != *chart {
        return Err(Error::MismatchedChart);
    }
    if !(eps_grad_rel > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_grad must be > 0, got {eps_grad_rel}")));
    }
    if axis > 2 {
        return Err(Error::InvalidArgument(format!("axis index {axis} not in 0..3")));
    }
    let grid = triple.grid;
    let grad_sup = triple.grad_sup(axis)?;
    let eps = eps_grad_rel * grad_sup;
    let cells: Vec<Option<CellValues>> = (0..grid.n_cells())
        .into_par_iter()
        .map(|c| cell_values(triple, chart, axis, c))
        .collect::<Result<_>>()?;
    let mut rhs = Vec::with_capacity(cells.len());
    let mut hl2 = Vec::with_capacity(cells.len());
    let mut used = Vec::with_capacity(cells.len());
    let mut min_term = f64::INFINITY;
    for cv in cells.iter().flatten() {
        if cv.grad_norm < eps {
            continue;
        }
        let term = cv.hess_sq / cv.grad_norm;
        min_term = min_term.min(term);
        rhs.push((term + cv.scalar * cv.grad_norm) * cv.vol);
        hl2.push(cv.hess_sq * cv.vol);
        used.push(cv.vol);
    }
    let total = total_volume(chart, &grid)?;
    let rhs_integral = stats::pairwise_sum(&rhs) / (16.0 * std::f64::consts::PI);
    Ok(InequalityReport {
        axis,
        mass,
        rhs_integral,
        hessian_l2: stats::pairwise_sum(&hl2),
        grad_sup,
        slack: mass - rhs_integral,
        eps_grad: eps,
        excluded_fraction: 1.0 - stats::pairwise_sum(&used) / total,
        min_hessian_term: if min_term.is_finite() { min_term } else { 0.0 },
    })
}

/// Both sides of `∫|∇√|∇u||² ≤ ∫|∇²u|²/(4|∇u|)`.
///
/// The left side differentiates the node field `√|∇u|` by finite differences,
/// independently of the Hessian used on the right.
pub fn refined_kato_check(
    triple: &HarmonicTriple,
    chart: &MetricChart,
    axis: usize,
    eps_grad_rel: f64,
) -> Result<(f64, f64)> {
    if triple.chart != *chart {
        return Err(Error::MismatchedChart);
    }
    if !(eps_grad_rel > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_grad must be > 0, got {eps_grad_rel}")));
    }
    let grid = triple.grid;
    let eps = eps_grad_rel * triple.grad_sup(axis)?;
    let n = grid.len();
    // node values: |∇u|, √|∇u|, |∇²u|², g⁻¹
    let node: Vec<Option<(f64, f64, Mat3)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if !triple.is_valid(i) {
                return Ok(None);
            }
            let g = chart.metric_only(&grid.point_of(i))?;
            let g_inv = g.try_inverse().ok_or(Error::InvalidChart("singular metric".into()))?;
            let du = triple.du[axis].at(i);
            let gn = (du.transpose() * g_inv * du)[(0, 0)].sqrt();
            let hu = g_inv * triple.hess[axis].at(i);
            Ok(Some((gn, (hu * hu).trace(), g_inv)))
        })
        .collect::<Result<_>>()?;
    let sqrt_field: Vec<f64> = node.iter().map(|v| v.map_or(0.0, |(gn, _, _)| gn.sqrt())).collect();
    let ds: [Vec<f64>; 3] = std::array::from_fn(|a| first_derivative(&grid, &sqrt_field, a));
    // stencils reach two nodes along each axis
    let usable = |i: usize| -> bool {
        let Some((gn, _, _)) = node[i] else { return false };
        if gn < eps {
            return false;
        }
        let (x, y, z) = grid.ijk(i);
        let p = [x, y, z];
        let st = [1, grid.n, grid.n * grid.n];
        (0..3).all(|a| {
            p[a] >= 2
                && p[a] + 2 < grid.n
                && [i - 2 * st[a], i - st[a], i + st[a], i + 2 * st[a]].iter().all(|&q| node[q].is_some())
        })
    };
    let ok: Vec<bool> = (0..n).into_par_iter().map(usable).collect();
    let h3 = grid.h().powi(3);
    let terms: Vec<(f64, f64)> = (0..grid.n_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j, k) = grid.cell_ijk(c);
            let corners = grid.cell_corners(i, j, k);
            if !corners.iter().all(|&q| ok[q]) {
                return Ok((0.0, 0.0));
            }
            let (mut l, mut r) = (0.0, 0.0);
            for &q in &corners {
                let (gn, hs, g_inv) = node[q].expect("usable nodes are valid");
                let d = Vec3::new(ds[0][q], ds[1][q], ds[2][q]);
                l += (d.transpose() * g_inv * d)[(0, 0)];
                r += hs / (4.0 * gn);
            }
            let vol = chart.metric_only(&grid.cell_center(i, j, k))?.determinant().sqrt() * h3;
            Ok((l / 8.0 * vol, r / 8.0 * vol))
        })
        .collect::<Result<_>>()?;
    let (l, r): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
    Ok((stats::pairwise_sum(&l), stats::pairwise_sum(&r)))
}

/// Vector field entering the relaxed scalar-curvature condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorFieldSpec {
    #[default]
    Zero,
    /// `X = ∇_g w` for the compactly supported bump `w`.
    GradientOfBump { amp: f64, center: [f64; 3], width: f64 },
}

impl VectorFieldSpec {
    /// Returns `(|X|²_g, div_g X)` at `x`.
    pub fn eval(&self, chart: &MetricChart, x: &Vec3) -> Result<(f64, f64)> {
        match *self {
            VectorFieldSpec::Zero => Ok((0.0, 0.0)),
            VectorFieldSpec::GradientOfBump { amp, center, width } => {
                let w = Bump { amp, center: Vec3::from(center), width }.eval(x);
                let m = chart.metric_at(x)?;
                let g_inv = m.g.try_inverse().ok_or(Error::InvalidChart("singular metric".into()))?;
                let xv = g_inv * w.grad;
                let norm2 = w.grad.dot(&xv);
                // div X = ∂_a X^a + Γ^a_ab X^b
                let gamma = christoffel(&g_inv, &m.dg);
                let mut div = (g_inv * w.hess).trace();
                for a in 0..3 {
                    let dg_inv = -(g_inv * m.dg[a] * g_inv);
                    div += (dg_inv * w.grad)[a];
                    for b in 0..3 {
                        div += gamma[a][(a, b)] * xv[b];
                    }
                }
                Ok((norm2, div))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedScalarCertificate {
    pub x_spec: VectorFieldSpec,
    /// Coefficient in front of `|X|²` (1 in the unrelaxed statement).
    pub c: f64,
    pub psi_l1: f64,
    /// Largest `|x|` of a cell with `ψ > 1e−12` (0 if none).
    pub psi_support_radius: f64,
    /// `ψ` vanishes on every cell beyond `psi_support_radius` inside the box
    /// and the support stays away from the box boundary.
    pub holds_pointwise_outside: bool,
}

const PSI_ZERO: f64 = 1e-12;

/// `ψ = max(0, c|X|² + div X − R)` integrated by the cell-midpoint rule.
pub fn relaxed_scalar_certificate(
    chart: &MetricChart,
    grid: &Grid,
    x_spec: VectorFieldSpec,
    c: f64,
) -> Result<RelaxedScalarCertificate> {
    let h3 = grid.h().powi(3);
    let cells: Vec<(f64, f64)> = (0..grid.n_cells())
        .into_par_iter()
        .map(|ci| {
            let (i, j, k) = grid.cell_ijk(ci);
            let x = grid.cell_center(i, j, k);
            let r = chart.curvature_at(&x)?.scalar;
            let (n2, div) = x_spec.eval(chart, &x)?;
            // values at roundoff level (R of a scalar-flat metric evaluates to
            // ±1e-16) count as zero
            let psi = c * n2 + div - r;
            let psi = if psi > PSI_ZERO { psi } else { 0.0 };
            let vol = chart.metric_only(&x)?.determinant().sqrt() * h3;
            Ok((psi * vol, if psi > PSI_ZERO { x.norm() } else { 0.0 }))
        })
        .collect::<Result<_>>()?;
    let (l1, radii): (Vec<f64>, Vec<f64>) = cells.into_iter().unzip();
    let support = radii.into_iter().fold(0.0, f64::max);
    Ok(RelaxedScalarCertificate {
        x_spec,
        c,
        psi_l1: stats::pairwise_sum(&l1),
        psi_support_radius: support,
        holds_pointwise_outside: support < grid.r_out - 2.0 * grid.h(),
    })
}

/// Extrapolated slack from two grid levels (`fine` has half the spacing):
/// `(estimate, error band)`.
pub fn extrapolate_slack(coarse: f64, fine: f64, order: f64) -> (f64, f64) {
    stats::richardson(coarse, fine, 2.0, order)
}
