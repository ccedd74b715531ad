//! Experiment configuration: one TOML file with `[metric]`, `[grid]`,
//! `[solver]`, `[sampling]`, `[sweep]`, `[output]` (and an optional
//! `[certificate]`) sections.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use afstab_core::geometry::DEFAULT_BASE_POINT;
use afstab_core::gh::SweepProtocol;
use afstab_core::harmonic::SolverOptions;
use afstab_core::inequality::VectorFieldSpec;
use afstab_core::{BoundaryPolicy, Decay, Domain, FamilyTag, Grid, MetricChart, Normalization, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricBlock {
    pub family: FamilyTag,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "d_half_width")]
    pub half_width: f64,
    #[serde(default)]
    pub excision_radius: f64,
    /// Declared decay constants.
    #[serde(default = "d_b")]
    pub b: f64,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "d_base_point")]
    pub base_point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default = "d_r_out")]
    pub r_out: f64,
    #[serde(default = "d_bc")]
    pub bc: BoundaryPolicy,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    /// Gradient floor relative to `sup|∇u|`.
    #[serde(default = "d_eps_grad")]
    pub eps_grad: f64,
    /// Mass extraction radii (increasing).
    #[serde(default = "d_mass_radii")]
    pub mass_radii: Vec<f64>,
    /// Largest relative rms residual of the mass fit.
    #[serde(default = "d_fit_threshold")]
    pub fit_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    /// Mandatory; `--seed` can supply it instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Radius of `B_r(p)`.
    #[serde(default = "d_r")]
    pub r: f64,
    /// Mean-value perturbation radius; two cells when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "d_n_pairs")]
    pub n_pairs: usize,
    #[serde(default = "d_n_pyth_pairs")]
    pub n_pyth_pairs: usize,
    #[serde(default = "d_n_targets")]
    pub n_targets: usize,
    #[serde(default = "d_target_radius")]
    pub target_radius: f64,
    #[serde(default = "d_n_samples")]
    pub n_samples: usize,
    /// Far-point magnitude for level-set projections; `0.6 R_out` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_l: Option<f64>,
    /// Ball the flows must stay in; `R_out / 2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_ball_r: Option<f64>,
    /// Bishop–Gromov radii about the base point.
    #[serde(default = "d_bg_radii")]
    pub bg_radii: Vec<f64>,
    /// Fast-marching nodes per axis (odd).
    #[serde(default = "d_bg_n")]
    pub bg_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: String,
    /// Strictly decreasing.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    #[serde(default = "d_formats")]
    pub formats: Vec<Format>,
    /// Write binary `u` dumps from `harmonic`.
    #[serde(default = "d_true")]
    pub dump_fields: bool,
}

/// Relaxed scalar-curvature certificate settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateBlock {
    #[serde(default)]
    pub x_field: VectorFieldSpec,
    #[serde(default = "d_c")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub metric: MetricBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub sampling: SamplingBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub certificate: CertificateBlock,
}

fn d_half_width() -> f64 {
    200.0
}
fn d_b() -> f64 {
    10.0
}
fn d_tau() -> f64 {
    1.0
}
fn d_base_point() -> [f64; 3] {
    DEFAULT_BASE_POINT
}
fn d_n() -> usize {
    65
}
fn d_r_out() -> f64 {
    20.0
}
fn d_bc() -> BoundaryPolicy {
    BoundaryPolicy::Corrected
}
fn d_tol() -> f64 {
    1e-10
}
fn d_max_iter() -> usize {
    20_000
}
fn d_eps_grad() -> f64 {
    1e-6
}
fn d_mass_radii() -> Vec<f64> {
    vec![25.0, 50.0, 100.0]
}
fn d_fit_threshold() -> f64 {
    afstab_core::mass::DEFAULT_FIT_THRESHOLD
}
fn d_r() -> f64 {
    3.0
}
fn d_n_pairs() -> usize {
    200
}
fn d_n_pyth_pairs() -> usize {
    50
}
fn d_n_targets() -> usize {
    20
}
fn d_target_radius() -> f64 {
    2.0
}
fn d_n_samples() -> usize {
    8
}
fn d_bg_radii() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
}
fn d_bg_n() -> usize {
    81
}
fn d_dir() -> PathBuf {
    PathBuf::from("out")
}
fn d_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}
fn d_true() -> bool {
    true
}
fn d_c() -> f64 {
    1.0
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { n: d_n(), r_out: d_r_out(), bc: d_bc(), normalization: Normalization::default() }
    }
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tol: d_tol(),
            max_iter: d_max_iter(),
            eps_grad: d_eps_grad(),
            mass_radii: d_mass_radii(),
            fit_threshold: d_fit_threshold(),
        }
    }
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: d_dir(), formats: d_formats(), dump_fields: true }
    }
}

impl Default for CertificateBlock {
    fn default() -> Self {
        CertificateBlock { x_field: VectorFieldSpec::Zero, c: d_c() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error{}: {message}", location.map(|(l, c)| format!(" at line {l}, column {c}")).unwrap_or_default())]
    Parse { location: Option<(usize, usize)>, message: String },
    #[error("{} invalid field(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Parses without validating.
pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let location = e.span().map(|s| line_col(text, s.start));
        ConfigError::Parse { location, message: e.message().to_string() }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Reads, parses and validates; every violation is reported at once.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let cfg = from_toml_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn seed(&self) -> u64 {
        self.sampling.seed.expect("validated config carries a seed")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        let mut bad = |field: &str, message: String| v.push(Violation { field: field.into(), message });
        let m = &self.metric;
        if !(m.tau > 0.5) {
            bad("metric.tau", format!("tau must exceed 1/2 (got {})", m.tau));
        } else if m.tau > 1.0 {
            bad("metric.tau", format!("tau must lie in (1/2, 1] (got {})", m.tau));
        }
        if !(m.b > 0.0) {
            bad("metric.b", format!("b must be > 0 (got {})", m.b));
        }
        if !(m.half_width > 0.0 && m.half_width.is_finite()) {
            bad("metric.half_width", format!("must be a positive number (got {})", m.half_width));
        }
        if !(m.excision_radius >= 0.0) {
            bad("metric.excision_radius", format!("must be ≥ 0 (got {})", m.excision_radius));
        }
        if m.base_point.iter().any(|c| !c.is_finite()) {
            bad("metric.base_point", "coordinates must be finite".into());
        }
        if let Err(e) = MetricChart::new(
            m.family,
            m.params.clone(),
            Domain { half_width: m.half_width.abs(), excision_radius: m.excision_radius.abs() },
            Decay { b: 1.0, tau: 1.0 },
        ) {
            bad("metric.params", e.to_string());
        }

        let g = &self.grid;
        if g.n < 17 || g.n % 2 == 0 {
            bad("grid.n", format!("must be odd and ≥ 17 (got {})", g.n));
        }
        if !(g.r_out > 0.0) {
            bad("grid.r_out", format!("must be > 0 (got {})", g.r_out));
        } else if g.r_out > m.half_width {
            bad("grid.r_out", format!("must not exceed metric.half_width = {} (got {})", m.half_width, g.r_out));
        }
        if let Normalization::AnnulusAverage { r0, r1 } = g.normalization {
            if !(0.0 < r0 && r0 < r1 && r1 < g.r_out) {
                bad("grid.normalization", format!("need 0 < r0 < r1 < r_out (got {r0}, {r1})"));
            }
        }

        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            bad("solver.tol", format!("must lie in (0, 1) (got {})", s.tol));
        }
        if s.max_iter == 0 {
            bad("solver.max_iter", "must be ≥ 1".into());
        }
        if !(s.eps_grad > 0.0 && s.eps_grad < 1.0) {
            bad("solver.eps_grad", format!("must lie in (0, 1) (got {})", s.eps_grad));
        }
        if s.mass_radii.len() < 3 {
            bad("solver.mass_radii", "need at least 3 radii".into());
        }
        if s.mass_radii.windows(2).any(|w| !(w[1] > w[0])) {
            bad("solver.mass_radii", "must be strictly increasing".into());
        }
        if s.mass_radii.iter().any(|&r| !(r > 1.0 && r > m.excision_radius && r <= m.half_width)) {
            bad("solver.mass_radii", format!("each radius must lie in (max(1, r_exc), {}]", m.half_width));
        }
        if !(s.fit_threshold > 0.0) {
            bad("solver.fit_threshold", format!("must be > 0 (got {})", s.fit_threshold));
        }

        let p = &self.sampling;
        match p.seed {
            None => bad("sampling.seed", "seed is mandatory".into()),
            // TOML integers are signed 64-bit
            Some(s) if s > i64::MAX as u64 => bad("sampling.seed", format!("seed must be at most {}", i64::MAX)),
            _ => {}
        }
        if !(p.r > 0.0) {
            bad("sampling.r", format!("must be > 0 (got {})", p.r));
        }
        if let Some(rho) = p.rho {
            if !(rho > 0.0) {
                bad("sampling.rho", format!("must be > 0 (got {rho})"));
            }
        }
        if p.n_pairs == 0 {
            bad("sampling.n_pairs", "must be ≥ 1".into());
        }
        if p.n_samples == 0 {
            bad("sampling.n_samples", "must be ≥ 1".into());
        }
        if !(p.target_radius > 0.0) {
            bad("sampling.target_radius", format!("must be > 0 (got {})", p.target_radius));
        }
        if let Some(l) = p.far_l {
            if !(l > 0.0 && l < g.r_out) {
                bad("sampling.far_l", format!("must lie in (0, r_out) (got {l})"));
            }
        }
        if let Some(b) = p.flow_ball_r {
            if !(b > 0.0) {
                bad("sampling.flow_ball_r", format!("must be > 0 (got {b})"));
            }
        }
        if p.bg_radii.is_empty() || p.bg_radii.iter().any(|&r| !(r > 0.0)) {
            bad("sampling.bg_radii", "need at least one positive radius".into());
        }
        if p.bg_radii.windows(2).any(|w| !(w[1] > w[0])) {
            bad("sampling.bg_radii", "must be strictly increasing".into());
        }
        if p.bg_n < 5 || p.bg_n % 2 == 0 {
            bad("sampling.bg_n", format!("must be odd and ≥ 5 (got {})", p.bg_n));
        }

        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                bad("sweep.values", "need at least one value".into());
            }
            if sw.values.windows(2).any(|w| !(w[1] < w[0])) {
                bad("sweep.values", "must be strictly decreasing".into());
            }
            if let Some(&v) = sw.values.first() {
                let mut params = m.params.clone();
                params.insert(sw.parameter.clone(), v);
                let dom = Domain { half_width: m.half_width.abs(), excision_radius: m.excision_radius.abs() };
                if let Err(e) = MetricChart::new(m.family, params, dom, Decay { b: 1.0, tau: 1.0 }) {
                    bad("sweep.parameter", e.to_string());
                }
            }
        }

        if self.output.formats.is_empty() {
            bad("output.formats", "need at least one of \"json\", \"csv\"".into());
        }
        if !self.certificate.c.is_finite() {
            bad("certificate.c", "must be finite".into());
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// The configured chart (without any sweep override).
    pub fn chart(&self) -> afstab_core::Result<MetricChart> {
        let m = &self.metric;
        Ok(MetricChart::new(
            m.family,
            m.params.clone(),
            Domain { half_width: m.half_width, excision_radius: m.excision_radius },
            Decay { b: m.b, tau: m.tau },
        )?
        .with_base_point(Vec3::from(m.base_point)))
    }

    pub fn grid(&self) -> afstab_core::Result<Grid> {
        Grid::new(self.grid.n, self.grid.r_out)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iter: self.solver.max_iter }
    }

    pub fn protocol(&self) -> afstab_core::Result<SweepProtocol> {
        let mut p = SweepProtocol::desk(self.grid.n, self.grid.r_out, self.seed())?;
        let s = &self.sampling;
        p.bc = self.grid.bc;
        p.solver = self.solver_options();
        p.eps_grad = self.solver.eps_grad;
        p.mass_radii = self.solver.mass_radii.clone();
        p.r = s.r;
        p.n_pairs = s.n_pairs;
        p.n_pyth_pairs = s.n_pyth_pairs;
        p.n_targets = s.n_targets;
        p.target_radius = s.target_radius;
        p.n_samples = s.n_samples;
        if let Some(rho) = s.rho {
            p.rho = rho;
        }
        if let Some(l) = s.far_l {
            p.far_l = l;
        }
        if let Some(b) = s.flow_ball_r {
            p.flow_ball_r = b;
        }
        Ok(p)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const MINIMAL: &str = r#"
[metric]
family = "Flat"

[sampling]
seed = 7
"#;

    #[test]
    fn minimal_flat_config_gets_defaults() {
        let c = from_toml_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid, GridBlock::default());
        assert_eq!(c.solver, SolverBlock::default());
        assert_eq!(c.sampling.n_pairs, 200);
        assert_eq!(c.metric.base_point, [2.0, 0.0, 0.0]);
        assert!(c.sweep.is_none());
        assert_eq!(c.seed(), 7);
    }

    #[test]
    fn small_tau_rejected() {
        let c = from_toml_str(&MINIMAL.replace("family = \"Flat\"", "family = \"Flat\"\ntau = 0.4")).unwrap();
        let e = c.validate().unwrap_err();
        assert!(e.violations().iter().any(|v| v.field == "metric.tau" && v.message.contains("tau must exceed 1/2")));
    }

    #[test]
    fn all_violations_reported() {
        let text = r#"
[metric]
family = "SchwarzschildIsotropic"
params = { m = 0.1, bogus = 1.0 }
tau = 0.3

[grid]
n = 64

[solver]
eps_grad = -1.0

[sampling]
r = 3.0
"#;
        let e = from_toml_str(text).unwrap().validate().unwrap_err();
        let fields: Vec<&str> = e.violations().iter().map(|v| v.field.as_str()).collect();
        for f in ["metric.tau", "metric.params", "grid.n", "solver.eps_grad", "sampling.seed"] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn seed_must_fit_toml_integer() {
        let mut c = from_toml_str("[metric]\nfamily = \"Flat\"\n[sampling]\nseed = 1\n").unwrap();
        c.sampling.seed = Some(u64::MAX);
        let e = c.validate().unwrap_err();
        assert_eq!(e.violations()[0].field, "sampling.seed");
    }

    #[test]
    fn parse_error_has_location() {
        let e = from_toml_str("[metric]\nfamily = \"Flat\"\n[grid]\nn = \"many\"\n").unwrap_err();
        match e {
            ConfigError::Parse { location: Some((line, _)), .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(from_toml_str("[metric]\nfamily = \"Flat\"\nwhat = 1\n[sampling]\nseed = 1\n").is_err());
    }

    #[test]
    fn increasing_sweep_rejected() {
        let text = format!("{MINIMAL}\n[sweep]\nparameter = \"m\"\nvalues = [0.1, 0.2]\n")
            .replace("\"Flat\"", "\"SchwarzschildIsotropic\"\nparams = { m = 0.1 }");
        let e = from_toml_str(&text).unwrap().validate().unwrap_err();
        assert_eq!(e.violations()[0].field, "sweep.values");
    }

    fn family() -> impl Strategy<Value = (FamilyTag, BTreeMap<String, f64>)> {
        prop_oneof![
            Just((FamilyTag::Flat, BTreeMap::new())),
            (0.0..1.0f64).prop_map(|m| (FamilyTag::SchwarzschildIsotropic, BTreeMap::from([("m".to_string(), m)]))),
            (0.0..0.5f64, 0.5..3.0f64).prop_map(|(a, w)| (
                FamilyTag::ConformallyFlat,
                BTreeMap::from([("A".to_string(), 0.1), ("gauss_amp".to_string(), a), ("gauss_width".to_string(), w)])
            )),
        ]
    }

    fn config() -> impl Strategy<Value = ExperimentConfig> {
        (
            family(),
            (0.51..1.0f64, 0.1..100.0f64, 8usize..40, prop::option::of(0..=i64::MAX as u64)),
            (prop::option::of(0.01..2.0f64), 1usize..500, prop::bool::ANY, prop::option::of(prop::collection::vec(0.0..1.0f64, 1..5))),
            prop_oneof![Just(BoundaryPolicy::Plain), Just(BoundaryPolicy::Corrected), Just(BoundaryPolicy::Monopole)],
        )
            .prop_map(|((family, params), (tau, b, half_n, seed), (rho, n_pairs, dump, sweep), bc)| {
                let mut c = from_toml_str(MINIMAL).unwrap();
                c.metric.family = family;
                c.metric.params = params;
                c.metric.tau = tau;
                c.metric.b = b;
                c.grid.n = 2 * half_n + 1;
                c.grid.bc = bc;
                c.sampling.seed = seed;
                c.sampling.rho = rho;
                c.sampling.n_pairs = n_pairs;
                c.output.dump_fields = dump;
                c.sweep = sweep.map(|values| SweepBlock { parameter: "m".into(), values });
                c
            })
    }

    proptest! {
        #[test]
        fn round_trip(c in config()) {
            let text = c.to_toml_string();
            let back = from_toml_str(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_toml_string(), text);
        }
    }
}
