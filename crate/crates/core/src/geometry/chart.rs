use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conformal::{Bump, ConformalFactor, FactorValue, Gaussian};
use crate::{Error, Mat3, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    Flat,
    SchwarzschildIsotropic,
    ConformallyFlat,
    Perturbed,
}

impl FamilyTag {
    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Flat => "Flat",
            FamilyTag::SchwarzschildIsotropic => "SchwarzschildIsotropic",
            FamilyTag::ConformallyFlat => "ConformallyFlat",
            FamilyTag::Perturbed => "Perturbed",
        }
    }
}

/// Axis-aligned box `[−half_width, half_width]³` minus the closed ball of
/// radius `excision_radius` about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub half_width: f64,
    #[serde(default)]
    pub excision_radius: f64,
}

/// Declared decay `|∂^β(g − δ)| ≤ b |x|^{−τ−|β|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub b: f64,
    pub tau: f64,
}

/// Metric and its first two coordinate derivatives at a point.
///
/// `dg[k][(i, j)] = ∂_k g_ij` and `ddg[k][l][(i, j)] = ∂_k ∂_l g_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricDerivs {
    pub g: Mat3,
    pub dg: [Mat3; 3],
    pub ddg: [[Mat3; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChartSpec {
    family: FamilyTag,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    domain: Domain,
    decay: Decay,
    base_point: [f64; 3],
}

/// A closed-form conformally flat metric `g = φ⁴δ` on a global chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChartSpec", into = "ChartSpec")]
pub struct MetricChart {
    pub family: FamilyTag,
    pub params: BTreeMap<String, f64>,
    pub domain: Domain,
    pub decay: Decay,
    pub base_point: Vec3,
    factor: ConformalFactor,
}

impl TryFrom<ChartSpec> for MetricChart {
    type Error = Error;
    fn try_from(s: ChartSpec) -> Result<Self> {
        let mut c = MetricChart::new(s.family, s.params, s.domain, s.decay)?;
        c.base_point = Vec3::from(s.base_point);
        Ok(c)
    }
}

impl From<MetricChart> for ChartSpec {
    fn from(c: MetricChart) -> Self {
        ChartSpec {
            family: c.family,
            params: c.params,
            domain: c.domain,
            decay: c.decay,
            base_point: c.base_point.into(),
        }
    }
}

pub const DEFAULT_BASE_POINT: [f64; 3] = [2.0, 0.0, 0.0];

fn allowed_param(family: FamilyTag, name: &str) -> bool {
    const GAUSS: [&str; 5] = ["gauss_amp", "gauss_width", "gauss_x", "gauss_y", "gauss_z"];
    match family {
        FamilyTag::Flat => false,
        FamilyTag::SchwarzschildIsotropic => name == "m",
        FamilyTag::ConformallyFlat => name == "A" || GAUSS.contains(&name) || bump_key(name).is_some(),
        FamilyTag::Perturbed => name == "A" || bump_key(name).is_some(),
    }
}

/// Parses `bump{k}_{amp|width|x|y|z}`.
fn bump_key(name: &str) -> Option<(usize, &str)> {
    let rest = name.strip_prefix("bump")?;
    let (idx, field) = rest.split_once('_')?;
    let k = idx.parse().ok()?;
    matches!(field, "amp" | "width" | "x" | "y" | "z").then_some((k, field))
}

impl MetricChart {
    pub fn new(
        family: FamilyTag,
        params: BTreeMap<String, f64>,
        domain: Domain,
        decay: Decay,
    ) -> Result<Self> {
        if let Some(bad) = params.keys().find(|k| !allowed_param(family, k)) {
            return Err(Error::InvalidChart(format!(
                "parameter `{bad}` is not defined for family {}",
                family.name()
            )));
        }
        if let Some((k, v)) = params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidChart(format!("parameter `{k}` = {v} is not finite")));
        }
        if !(domain.half_width > 0.0) || !(domain.excision_radius >= 0.0) {
            return Err(Error::InvalidChart("domain half-width must be > 0 and excision radius ≥ 0".into()));
        }
        if !(decay.b > 0.0) || !(decay.tau > 0.5 && decay.tau < 1.0 + 1e-12) {
            return Err(Error::InvalidChart(format!(
                "decay requires b > 0 and tau in (1/2, 1], got b={}, tau={}",
                decay.b, decay.tau
            )));
        }
        let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
        let mut factor = ConformalFactor::default();
        match family {
            FamilyTag::Flat => {}
            FamilyTag::SchwarzschildIsotropic => {
                let m = get("m", 0.0);
                if m < 0.0 {
                    return Err(Error::InvalidChart(format!("mass m = {m} must be ≥ 0")));
                }
                factor.monopole = m;
            }
            FamilyTag::ConformallyFlat | FamilyTag::Perturbed => {
                factor.monopole = get("A", 0.0);
                if factor.monopole < 0.0 {
                    return Err(Error::InvalidChart("monopole A must be ≥ 0".into()));
                }
                let ga = get("gauss_amp", 0.0);
                if ga != 0.0 {
                    factor.gaussians.push(Gaussian {
                        amp: ga,
                        center: Vec3::new(get("gauss_x", 0.0), get("gauss_y", 0.0), get("gauss_z", 0.0)),
                        width: get("gauss_width", 1.0),
                    });
                }
                let n_bumps = params
                    .keys()
                    .filter_map(|k| bump_key(k).map(|(i, _)| i + 1))
                    .max()
                    .unwrap_or(0);
                for i in 0..n_bumps {
                    let f = |field: &str, d: f64| get(&format!("bump{i}_{field}"), d);
                    factor.bumps.push(Bump {
                        amp: f("amp", 0.0),
                        center: Vec3::new(f("x", 0.0), f("y", 0.0), f("z", 0.0)),
                        width: f("width", 1.0),
                    });
                }
                if family == FamilyTag::Perturbed && factor.bumps.is_empty() {
                    return Err(Error::InvalidChart("Perturbed family needs at least one bump".into()));
                }
            }
        }
        if factor.gaussians.iter().any(|g| !(g.width > 0.0)) || factor.bumps.iter().any(|b| !(b.width > 0.0)) {
            return Err(Error::InvalidChart("gaussian and bump widths must be > 0".into()));
        }
        if factor.positivity_margin() <= 0.0 {
            return Err(Error::InvalidChart("negative amplitudes can drive φ ≤ 0".into()));
        }
        Ok(MetricChart {
            family,
            params,
            domain,
            decay,
            base_point: Vec3::from(DEFAULT_BASE_POINT),
            factor,
        })
    }

    pub fn flat(half_width: f64) -> Self {
        Self::new(
            FamilyTag::Flat,
            BTreeMap::new(),
            Domain { half_width, excision_radius: 0.0 },
            Decay { b: 1.0, tau: 1.0 },
        )
        .expect("flat chart is always valid")
    }

    pub fn schwarzschild(m: f64, half_width: f64) -> Result<Self> {
        Self::new(
            FamilyTag::SchwarzschildIsotropic,
            BTreeMap::from([("m".to_string(), m)]),
            Domain { half_width, excision_radius: 0.0 },
            Decay { b: 10.0, tau: 1.0 },
        )
    }

    pub fn with_base_point(mut self, p: Vec3) -> Self {
        self.base_point = p;
        self
    }

    /// Copy with one parameter replaced (used by sweeps).
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.insert(name.to_string(), value);
        let mut c = Self::new(self.family, params, self.domain, self.decay)?;
        c.base_point = self.base_point;
        Ok(c)
    }

    pub fn factor(&self) -> &ConformalFactor {
        &self.factor
    }

    /// Monopole coefficient `A` of `φ`, which equals the ADM mass.
    pub fn monopole(&self) -> f64 {
        self.factor.monopole
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        x.iter().all(|c| c.abs() <= self.domain.half_width)
    }

    pub fn check_point(&self, x: &Vec3) -> Result<()> {
        if !x.iter().all(|c| c.is_finite()) || !self.contains(x) {
            return Err(Error::OutOfDomain { p: *x });
        }
        if self.domain.excision_radius > 0.0 && x.norm() <= self.domain.excision_radius {
            return Err(Error::ExcisedPoint { p: *x });
        }
        // the monopole is singular at the origin even without excision
        if self.factor.monopole != 0.0 && x.norm_squared() == 0.0 {
            return Err(Error::ExcisedPoint { p: *x });
        }
        Ok(())
    }

    /// Conformal factor with derivatives; same preconditions as [`Self::metric_at`].
    pub fn conformal_at(&self, x: &Vec3) -> Result<FactorValue> {
        self.check_point(x)?;
        Ok(self.factor.eval(x))
    }

    /// Exact `g`, `∂g`, `∂∂g` at `x`.
    pub fn metric_at(&self, x: &Vec3) -> Result<MetricDerivs> {
        let f = self.conformal_at(x)?;
        let (p, dp, hp) = (f.value, f.grad, f.hess);
        let p2 = p * p;
        let p3 = p2 * p;
        let psi = p2 * p2;
        let dpsi = dp * (4.0 * p3);
        let ddpsi = (dp * dp.transpose()) * (12.0 * p2) + hp * (4.0 * p3);
        let id = Mat3::identity();
        let mut dg = [Mat3::zeros(); 3];
        let mut ddg = [[Mat3::zeros(); 3]; 3];
        for k in 0..3 {
            dg[k] = id * dpsi[k];
            for l in 0..3 {
                ddg[k][l] = id * ddpsi[(k, l)];
            }
        }
        Ok(MetricDerivs { g: id * psi, dg, ddg })
    }

    /// Just `g` (cheaper when derivatives are not needed).
    pub fn metric_only(&self, x: &Vec3) -> Result<Mat3> {
        self.check_point(x)?;
        let p = self.factor.eval_value(x);
        Ok(Mat3::identity() * (p * p * p * p))
    }
}

impl ConformalFactor {
    pub(crate) fn eval_value(&self, x: &Vec3) -> f64 {
        if self.gaussians.is_empty() && self.bumps.is_empty() {
            if self.monopole == 0.0 {
                1.0
            } else {
                1.0 + 0.5 * self.monopole / x.norm()
            }
        } else {
            self.eval(x).value
        }
    }
}
