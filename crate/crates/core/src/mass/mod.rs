//! ADM mass from coordinate-sphere flux integrals.

mod quadrature;

use serde::{Deserialize, Serialize};

pub use quadrature::{gauss_legendre, SphereRule};

use crate::{stats, Error, MetricChart, Result, Vec3};

/// Flux integrand `Σ_ij (∂_i g_ij − ∂_j g_ii) ν^j` at `x = r ν`.
fn flux_density(chart: &MetricChart, x: &Vec3, nu: &Vec3) -> Result<f64> {
    let m = chart.metric_at(x)?;
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (m.dg[i][(i, j)] - m.dg[j][(i, i)]) * nu[j];
        }
    }
    Ok(s)
}

/// `(1/16π) ∮_{S_r} Σ_ij (∂_i g_ij − ∂_j g_ii) ν^j dA` with Euclidean `ν`, `dA`.
pub fn adm_mass_at_radius(chart: &MetricChart, r: f64, rule: &SphereRule) -> Result<f64> {
    if !(r > 1.0_f64.max(chart.domain.excision_radius)) {
        return Err(Error::InvalidArgument(format!(
            "extraction radius {r} must exceed max(1, r_exc)"
        )));
    }
    if r > chart.domain.half_width {
        return Err(Error::OutOfDomain { p: Vec3::new(r, 0.0, 0.0) });
    }
    let total = rule.integrate(|nu| flux_density(chart, &(nu * r), &nu))?;
    Ok(total * r * r / (16.0 * std::f64::consts::PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtrapolationModel {
    /// `q = 1` for `τ = 1`, else `q = 2τ − 1`.
    FromDecay,
    Fixed(f64),
    /// `q` chosen by least squares as well.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub radii: Vec<f64>,
    pub raw_values: Vec<f64>,
    pub extrapolated: f64,
    pub fit_exponent: f64,
    pub fit_residual: f64,
    pub quadrature_order: usize,
}

impl MassReport {
    /// `(r, m(r), |m(r) − m_∞|)` rows.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        self.radii
            .iter()
            .zip(&self.raw_values)
            .map(|(&r, &m)| (r, m, (m - self.extrapolated).abs()))
            .collect()
    }
}

/// Least squares for `m(r) = m_∞ + a r^{−q}` at fixed `q`; returns
/// `(m_∞, a, rms residual)`.
fn fit_fixed(radii: &[f64], vals: &[f64], q: f64) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = radii.iter().zip(vals).map(|(&r, &m)| (r.powf(-q), m)).collect();
    let (a, m_inf) = if pts.iter().all(|p| p.1 == pts[0].1) {
        (0.0, pts[0].1)
    } else {
        stats::linear_fit(&pts)
    };
    let rss: f64 = pts.iter().map(|(x, y)| (y - m_inf - a * x).powi(2)).sum();
    (m_inf, a, (rss / pts.len() as f64).sqrt())
}

pub const DEFAULT_FIT_THRESHOLD: f64 = 1e-3;

pub fn adm_mass(
    chart: &MetricChart,
    radii: &[f64],
    model: ExtrapolationModel,
    rule: &SphereRule,
    fit_threshold: f64,
) -> Result<MassReport> {
    if radii.len() < 3 {
        return Err(Error::InvalidArgument("mass extrapolation needs ≥ 3 radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
    }
    let raw_values = radii
        .iter()
        .map(|&r| adm_mass_at_radius(chart, r, rule))
        .collect::<Result<Vec<_>>>()?;
    let q_decay = if (chart.decay.tau - 1.0).abs() < 1e-12 { 1.0 } else { 2.0 * chart.decay.tau - 1.0 };
    let (m_inf, q, resid) = match model {
        ExtrapolationModel::FromDecay => {
            let (m, _, r) = fit_fixed(radii, &raw_values, q_decay);
            (m, q_decay, r)
        }
        ExtrapolationModel::Fixed(q) => {
            let (m, _, r) = fit_fixed(radii, &raw_values, q);
            (m, q, r)
        }
        ExtrapolationModel::Free => {
            // golden-section search on the residual over q ∈ [0.05, 4]
            let f = |q: f64| fit_fixed(radii, &raw_values, q).2;
            let (mut a, mut b) = (0.05f64, 4.0f64);
            let gr = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let c = b - gr * (b - a);
                let d = a + gr * (b - a);
                if f(c) <= f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let q = 0.5 * (a + b);
            let (m, _, r) = fit_fixed(radii, &raw_values, q);
            (m, q, r)
        }
    };
    let scale = m_inf.abs().max(raw_values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let rel = if scale > 0.0 { resid / scale } else { 0.0 };
    if rel > fit_threshold {
        return Err(Error::FitFailure { residual: rel, threshold: fit_threshold });
    }
    Ok(MassReport {
        radii: radii.to_vec(),
        raw_values,
        extrapolated: m_inf,
        fit_exponent: q,
        fit_residual: rel,
        quadrature_order: rule.n_theta,
    })
}

/// `∫_{|x| < r_max} |R_g| dV` by radial Gauss–Legendre shells, plus the
/// outermost shell density `∮_{S_r_max} |R_g| √det g dA` (reported so the
/// tail can be judged; not enforced).
pub fn scalar_curvature_l1(
    chart: &MetricChart,
    r_min: f64,
    r_max: f64,
    n_radial: usize,
    rule: &SphereRule,
) -> Result<(f64, f64)> {
    let shell = |r: f64| -> Result<f64> {
        let v = rule.integrate(|nu| {
            let x = nu * r;
            let c = chart.curvature_at(&x)?;
            let det = chart.metric_only(&x)?.determinant();
            Ok(c.scalar.abs() * det.sqrt())
        })?;
        Ok(v * r * r)
    };
    let (nodes, weights) = gauss_legendre(n_radial);
    let half = 0.5 * (r_max - r_min);
    let mid = 0.5 * (r_max + r_min);
    let mut total = 0.0;
    for (t, w) in nodes.iter().zip(&weights) {
        total += w * half * shell(mid + half * t)?;
    }
    Ok((total, shell(r_max)?))
}
