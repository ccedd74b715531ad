use serde::{Deserialize, Serialize};

use super::chart::{MetricChart, MetricDerivs};
use crate::{Error, Mat3, Result, Vec3};

/// Connection and curvature at a chart point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub point: Vec3,
    /// `christoffel[k][(i, j)] = Γ^k_ij`.
    pub christoffel: [Mat3; 3],
    pub ricci: Mat3,
    pub scalar: f64,
}

/// `Γ^k_ij = ½ g^{km}(∂_i g_mj + ∂_j g_mi − ∂_m g_ij)`.
pub fn christoffel(g_inv: &Mat3, dg: &[Mat3; 3]) -> [Mat3; 3] {
    let lowered = lowered_christoffel(dg);
    let mut out = [Mat3::zeros(); 3];
    for (k, gk) in out.iter_mut().enumerate() {
        for m in 0..3 {
            *gk += lowered[m] * g_inv[(k, m)];
        }
    }
    out
}

fn lowered_christoffel(dg: &[Mat3; 3]) -> [Mat3; 3] {
    let mut low = [Mat3::zeros(); 3];
    for (m, lm) in low.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                lm[(i, j)] = 0.5 * (dg[i][(m, j)] + dg[j][(m, i)] - dg[m][(i, j)]);
            }
        }
    }
    low
}

pub(crate) fn invert(g: &Mat3, x: &Vec3) -> Result<Mat3> {
    g.try_inverse().ok_or(Error::InvalidChart(format!(
        "metric is singular at ({}, {}, {})",
        x[0], x[1], x[2]
    )))
}

/// Christoffel symbols, Ricci tensor and scalar curvature from `g`, `∂g`,
/// `∂∂g` with the standard coordinate formulas.
pub fn curvature_from_derivs(x: Vec3, m: &MetricDerivs) -> Result<CurvatureSample> {
    let g_inv = invert(&m.g, &x)?;
    let gamma = christoffel(&g_inv, &m.dg);
    let low = lowered_christoffel(&m.dg);

    // dgamma[l][k] = ∂_l Γ^k
    let mut dgamma = [[Mat3::zeros(); 3]; 3];
    for l in 0..3 {
        let dginv = -(g_inv * m.dg[l] * g_inv);
        let mut dlow = [Mat3::zeros(); 3];
        for (mm, dl) in dlow.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    dl[(i, j)] = 0.5
                        * (m.ddg[l][i][(mm, j)] + m.ddg[l][j][(mm, i)] - m.ddg[l][mm][(i, j)]);
                }
            }
        }
        for k in 0..3 {
            let mut acc = Mat3::zeros();
            for mm in 0..3 {
                acc += low[mm] * dginv[(k, mm)] + dlow[mm] * g_inv[(k, mm)];
            }
            dgamma[l][k] = acc;
        }
    }

    let mut ricci = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut r = 0.0;
            for k in 0..3 {
                r += dgamma[k][k][(i, j)] - dgamma[j][k][(i, k)];
                for l in 0..3 {
                    r += gamma[k][(k, l)] * gamma[l][(i, j)] - gamma[k][(j, l)] * gamma[l][(i, k)];
                }
            }
            ricci[(i, j)] = r;
        }
    }
    let scalar = (g_inv.component_mul(&ricci)).sum();
    Ok(CurvatureSample {
        point: x,
        christoffel: gamma,
        ricci,
        scalar,
    })
}

impl MetricChart {
    pub fn curvature_at(&self, x: &Vec3) -> Result<CurvatureSample> {
        curvature_from_derivs(*x, &self.metric_at(x)?)
    }

    /// `Γ^k_ij` only; the geodesic and Hessian kernels need nothing else.
    pub fn christoffel_at(&self, x: &Vec3) -> Result<[Mat3; 3]> {
        let m = self.metric_at(x)?;
        Ok(christoffel(&invert(&m.g, x)?, &m.dg))
    }
}
