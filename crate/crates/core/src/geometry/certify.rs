use serde::{Deserialize, Serialize};

use super::{
    chart::{Decay, MetricChart},
    SamplePolicy,
};
use crate::{stats, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfCheck {
    pub af_ok: bool,
    /// Negated log-log slope of `sup_{|x|=r} |g − δ|`; `None` when the
    /// deviation vanishes identically.
    pub fitted_tau: Option<f64>,
    /// Largest `|∂^β(g − δ)| / (b |x|^{−τ−|β|})` over samples and `|β| ≤ 2`.
    pub worst_ratio: f64,
    pub worst_point: Option<Vec3>,
    pub n_samples: usize,
}

/// Decay check on samples with `|x| ≥ 2`.
pub fn verify_asymptotic_flatness(chart: &MetricChart, policy: &SamplePolicy) -> AfCheck {
    let Decay { b, tau } = chart.decay;
    let mut worst_ratio = 0.0f64;
    let mut worst_point = None;
    let mut n_samples = 0;
    let mut shell_sup: Vec<(f64, f64)> = Vec::new();
    for &r in &policy.radii {
        if r < 2.0 {
            continue;
        }
        let mut sup0 = 0.0f64;
        let mut any = false;
        for (_, x) in policy.points().filter(|(rr, _)| *rr == r) {
            let Ok(m) = chart.metric_at(&x) else { continue };
            any = true;
            n_samples += 1;
            let d0 = (m.g - Mat3::identity()).abs().max();
            let d1 = m.dg.iter().map(|d| d.abs().max()).fold(0.0, f64::max);
            let d2 = m.ddg.iter().flatten().map(|d| d.abs().max()).fold(0.0, f64::max);
            sup0 = sup0.max(d0);
            for (k, d) in [d0, d1, d2].into_iter().enumerate() {
                let ratio = d / (b * r.powf(-tau - k as f64));
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_point = Some(x);
                }
            }
        }
        if any && sup0 > 0.0 {
            shell_sup.push((r.ln(), sup0.ln()));
        }
    }
    let fitted_tau = (shell_sup.len() >= 2).then(|| -stats::linear_fit(&shell_sup).0);
    AfCheck {
        af_ok: worst_ratio <= 1.0,
        fitted_tau,
        worst_ratio,
        worst_point,
        n_samples,
    }
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCertificate {
    pub scalar_min: f64,
    /// Smallest `κ ≥ 0` with `Ric ≥ −2κ g` on the samples.
    pub ricci_kappa: f64,
    pub af_ok: bool,
    /// `[argmin R, argmin λ(Ric, g)]`, plus the worst decay sample if any.
    pub witness_points: Vec<Vec3>,
    pub n_samples: usize,
}

/// Smallest eigenvalue of `Ric v = λ g v`.
pub fn min_generalized_eigenvalue(ricci: &Mat3, g: &Mat3) -> f64 {
    let l = g.cholesky().expect("metric is positive definite").l();
    let l_inv = l.try_inverse().expect("cholesky factor is invertible");
    let m = l_inv * ricci * l_inv.transpose();
    let m = (m + m.transpose()) * 0.5;
    m.symmetric_eigenvalues().min()
}

pub fn certify_hypotheses(chart: &MetricChart, policy: &SamplePolicy) -> HypothesisCertificate {
    let mut scalar_min = f64::INFINITY;
    let mut lambda_min = f64::INFINITY;
    let mut w_scalar = Vec3::zeros();
    let mut w_ricci = Vec3::zeros();
    let mut n = 0;
    for (_, x) in policy.points() {
        let Ok(m) = chart.metric_at(&x) else { continue };
        let Ok(c) = super::curvature_from_derivs(x, &m) else { continue };
        n += 1;
        if c.scalar < scalar_min {
            scalar_min = c.scalar;
            w_scalar = x;
        }
        let lam = min_generalized_eigenvalue(&c.ricci, &m.g);
        if lam < lambda_min {
            lambda_min = lam;
            w_ricci = x;
        }
    }
    let af = verify_asymptotic_flatness(chart, policy);
    let mut witness_points = vec![w_scalar, w_ricci];
    witness_points.extend(af.worst_point);
    HypothesisCertificate {
        scalar_min: if n == 0 { f64::NAN } else { scalar_min },
        ricci_kappa: (-0.5 * lambda_min).max(0.0) + 0.0,
        af_ok: af.af_ok,
        witness_points,
        n_samples: n,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::geometry::{Domain, FamilyTag};

    #[test]
    fn flat_certificate() {
        let c = MetricChart::flat(100.0);
        let cert = certify_hypotheses(&c, &SamplePolicy::log_shells(0.1, 50.0, 10, 20));
        assert_eq!(cert.ricci_kappa, 0.0);
        assert_eq!(cert.scalar_min, 0.0);
        assert!(cert.af_ok);
        let af = verify_asymptotic_flatness(&c, &SamplePolicy::default());
        assert!(af.af_ok && af.worst_ratio == 0.0 && af.fitted_tau.is_none());
    }

    #[test]
    fn schwarzschild_decay_fit() {
        let c = MetricChart::schwarzschild(0.5, 200.0).unwrap();
        let af = verify_asymptotic_flatness(&c, &SamplePolicy::log_shells(2.0, 150.0, 20, 32));
        assert!(af.af_ok, "{af:?}");
        let tau = af.fitted_tau.unwrap();
        assert!((tau - 1.0).abs() < 0.05, "{tau}");
    }

    #[test]
    fn schwarzschild_kappa_matches_axis_eigenvalues() {
        let m = 0.1;
        let c = MetricChart::schwarzschild(m, 100.0).unwrap();
        let policy = SamplePolicy::log_shells(0.005, 50.0, 400, 6);
        let cert = certify_hypotheses(&c, &policy);
        assert!(cert.scalar_min.abs() < 1e-10, "{}", cert.scalar_min);
        assert!(cert.ricci_kappa > 0.0 && cert.ricci_kappa.is_finite());
        // Areal-radius form: radial Ricci eigenvalue −2m/R³, minimized at the
        // neck R = 2m (isotropic r = m/2), giving κ = 1/(8m²).
        let on_axis = policy
            .radii
            .iter()
            .map(|&r| {
                let areal = r * (1.0 + m / (2.0 * r)).powi(2);
                -2.0 * m / areal.powi(3)
            })
            .fold(f64::INFINITY, f64::min);
        let kappa_axis = -0.5 * on_axis;
        assert!((cert.ricci_kappa - kappa_axis).abs() < 1e-6 * kappa_axis, "{} vs {}", cert.ricci_kappa, kappa_axis);
        assert!((kappa_axis - 1.0 / (8.0 * m * m)).abs() < 0.01 / (8.0 * m * m));
    }

    #[test]
    fn negative_bump_has_witness() {
        let c = MetricChart::new(
            FamilyTag::Perturbed,
            BTreeMap::from([("A".into(), 0.1), ("bump0_amp".into(), 0.3), ("bump0_width".into(), 2.0), ("bump0_x".into(), 2.0)]),
            Domain { half_width: 50.0, excision_radius: 0.0 },
            Decay { b: 10.0, tau: 1.0 },
        )
        .unwrap();
        let cert = certify_hypotheses(&c, &SamplePolicy::log_shells(0.5, 10.0, 40, 64));
        assert!(cert.scalar_min < 0.0);
        let w = cert.witness_points[0];
        assert!(c.curvature_at(&w).unwrap().scalar == cert.scalar_min);
        assert!((w - Vec3::new(2.0, 0.0, 0.0)).norm() < 2.0);
    }

    #[test]
    fn conformal_bump_decay_declared() {
        let c = MetricChart::new(
            FamilyTag::ConformallyFlat,
            BTreeMap::from([("A".into(), 0.3), ("bump0_amp".into(), 0.05), ("bump0_width".into(), 1.5), ("bump0_x".into(), 1.0)]),
            Domain { half_width: 200.0, excision_radius: 0.0 },
            Decay { b: 40.0, tau: 0.9 },
        )
        .unwrap();
        let af = verify_asymptotic_flatness(&c, &SamplePolicy::log_shells(2.0, 150.0, 60, 128));
        assert!(af.af_ok, "{af:?}");
    }
}
