//! Subcommand pipelines. Each writes its artifacts under the output
//! directory, then `summary.txt`, then `manifest.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use afstab_core::geodesy::bishop_gromov_check;
use afstab_core::geometry::{certify_hypotheses, verify_asymptotic_flatness};
use afstab_core::gh::{
    flow_traces, gh_distortion, pythagorean_records, stability_sweep, summarize_pythagorean, sweep_trends,
};
use afstab_core::grid::{line_probe, write_field, write_line_probe};
use afstab_core::harmonic::build_harmonic_triple;
use afstab_core::inequality::{mass_inequality_rhs, refined_kato_check, relaxed_scalar_certificate};
use afstab_core::mass::{adm_mass, scalar_curvature_l1, ExtrapolationModel, SphereRule};
use afstab_core::{HarmonicTriple, MassReport, MetricChart, SamplePolicy, Vec3};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig, Format, Violation};
use crate::manifest::{collect_artifacts, sha256_hex, RunManifest, StageStatus, MANIFEST_NAME};

pub const EXIT_OK: i32 = 0;
/// A stage ran but one of its assertions did not hold.
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
/// A numerical stage returned an error; later stages were skipped.
pub const EXIT_STAGE_ERROR: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    CheckAf,
    Mass,
    Harmonic,
    Inequality,
    Pythagoras,
    Distort,
    Flow,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckAf => "check-af",
            Command::Mass => "mass",
            Command::Harmonic => "harmonic",
            Command::Inequality => "inequality",
            Command::Pythagoras => "pythagoras",
            Command::Distort => "distort",
            Command::Flow => "flow",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Io { .. } => EXIT_IO,
        }
    }
}

type Out<T = ()> = Result<T, RunError>;

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    stages: Vec<StageStatus>,
    notes: Vec<String>,
    exit: i32,
}

impl Run<'_> {
    fn io(&self, name: &str) -> impl FnOnce(std::io::Error) -> RunError {
        let path = self.dir.join(name);
        move |source| RunError::Io { path, source }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Out {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(self.io(name))?;
        }
        std::fs::write(&path, bytes).map_err(self.io(name))
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Out {
        if !self.cfg.wants(Format::Json) {
            return Ok(());
        }
        let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Out {
        if !self.cfg.wants(Format::Csv) {
            return Ok(());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| std::io::Error::other(e.to_string());
        w.write_record(header).map_err(err).map_err(self.io(name))?;
        for r in rows {
            w.write_record(r).map_err(err).map_err(self.io(name))?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string())).map_err(self.io(name))?;
        self.write(name, &bytes)
    }

    /// Records a numerical failure; the caller stops after `None`.
    fn compute<T>(&mut self, stage: &str, r: afstab_core::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.stages.push(StageStatus { name: stage.into(), ok: false, message: e.to_string() });
                self.exit = EXIT_STAGE_ERROR;
                None
            }
        }
    }

    fn check(&mut self, stage: &str, ok: bool, message: String) {
        if !ok && self.exit == EXIT_OK {
            self.exit = EXIT_ASSERTION;
        }
        self.stages.push(StageStatus { name: stage.into(), ok, message });
    }

    fn note(&mut self, line: String) {
        self.notes.push(line);
    }

    fn chart(&mut self) -> Option<MetricChart> {
        let c = self.cfg.chart();
        self.compute("setup", c)
    }

    fn triple(&mut self, chart: &MetricChart) -> Option<HarmonicTriple> {
        let grid = self.compute("setup", self.cfg.grid())?;
        let t = build_harmonic_triple(
            chart,
            &grid,
            self.cfg.grid.bc,
            self.cfg.grid.normalization,
            &self.cfg.solver_options(),
        );
        let t = self.compute("harmonic", t)?;
        self.note(format!(
            "harmonic: N={} R_out={} iterations {:?} residuals {:.2e} {:.2e} {:.2e}",
            grid.n, grid.r_out, t.iterations, t.residual_norm[0], t.residual_norm[1], t.residual_norm[2]
        ));
        Some(t)
    }

    fn mass(&mut self, chart: &MetricChart) -> Option<MassReport> {
        let r = adm_mass(
            chart,
            &self.cfg.solver.mass_radii,
            ExtrapolationModel::FromDecay,
            &SphereRule::default(),
            self.cfg.solver.fit_threshold,
        );
        self.compute("mass", r)
    }
}

/// `f64` as written in CSV cells: shortest round-trip representation.
fn num(v: f64) -> String {
    format!("{v}")
}

fn vec3(v: &Vec3) -> [String; 3] {
    [num(v[0]), num(v[1]), num(v[2])]
}

/// Runs `cmd` and writes every artifact plus the manifest under `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Out<RunManifest> {
    cfg.validate()?;
    if cmd == Command::Sweep && cfg.sweep.is_none() {
        return Err(ConfigError::Invalid(vec![Violation {
            field: "sweep".into(),
            message: "the sweep subcommand needs a [sweep] section".into(),
        }])
        .into());
    }
    let started_at = chrono::Utc::now().to_rfc3339();
    std::fs::create_dir_all(out).map_err(|source| RunError::Io { path: out.into(), source })?;
    let mut run = Run { cfg, dir: out, stages: Vec::new(), notes: Vec::new(), exit: EXIT_OK };
    match cmd {
        Command::CheckAf => check_af(&mut run)?,
        Command::Mass => mass(&mut run)?,
        Command::Harmonic => harmonic(&mut run)?,
        Command::Inequality => inequality(&mut run)?,
        Command::Pythagoras => pythagoras(&mut run)?,
        Command::Distort => distort(&mut run)?,
        Command::Flow => flow(&mut run)?,
        Command::Sweep => sweep(&mut run)?,
    }

    let config_text = cfg.to_toml_string();
    let config_sha256 = sha256_hex(config_text.as_bytes());
    let mut summary = String::new();
    let _ = writeln!(summary, "afstab {} ({})", cmd.name(), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(summary, "config sha256 {config_sha256}");
    let _ = writeln!(summary, "family {} params {:?}", cfg.metric.family.name(), cfg.metric.params);
    for n in &run.notes {
        let _ = writeln!(summary, "{n}");
    }
    for s in &run.stages {
        let _ = writeln!(summary, "[{}] {}: {}", if s.ok { "PASS" } else { "FAIL" }, s.name, s.message);
    }
    let _ = writeln!(summary, "exit {}", run.exit);
    run.write("summary.txt", summary.as_bytes())?;
    run.write("config.resolved.toml", config_text.as_bytes())?;

    let artifacts = collect_artifacts(out).map_err(|source| RunError::Io { path: out.into(), source })?;
    let manifest = RunManifest {
        tool: "afstab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        config_sha256,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        stages: run.stages,
        artifacts,
        exit_code: run.exit,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    std::fs::write(out.join(MANIFEST_NAME), bytes)
        .map_err(|source| RunError::Io { path: out.join(MANIFEST_NAME), source })?;
    Ok(manifest)
}

fn check_af(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let policy = SamplePolicy::default();
    let af = verify_asymptotic_flatness(&chart, &policy);
    run.check(
        "decay",
        af.af_ok,
        format!("worst |∂^β(g−δ)| / (b|x|^(−τ−|β|)) = {:.4} over {} samples", af.worst_ratio, af.n_samples),
    );
    let cert = certify_hypotheses(&chart, &policy);
    run.note(format!("hypotheses: min R = {:.4e}, Ricci κ = {:.4e}", cert.scalar_min, cert.ricci_kappa));
    let p = chart.base_point;
    let radii = run.cfg.sampling.bg_radii.clone();
    let bg = bishop_gromov_check(&chart, &p, &radii, cert.ricci_kappa, run.cfg.sampling.bg_n);
    let bg = run.compute("bishop-gromov", bg);
    if let Some(bg) = &bg {
        run.check(
            "bishop-gromov",
            bg.max_relative_increase <= 0.01,
            format!("κ = {:.4e}, largest relative ratio increase {:.3e} (allowed 1e-2)", bg.kappa, bg.max_relative_increase),
        );
        let rows: Vec<Vec<String>> = (0..bg.radii.len())
            .map(|k| vec![num(bg.radii[k]), num(bg.volumes[k]), num(bg.model_volumes[k]), num(bg.ratios[k])])
            .collect();
        run.csv("bishop_gromov.csv", &["r", "volume", "model_volume", "ratio"], &rows)?;
    }
    run.json("af.json", &json!({ "decay": af, "hypotheses": cert, "bishop_gromov": bg }))
}

fn mass(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let Some(rep) = run.mass(&chart) else { return Ok(()) };
    let a = chart.monopole();
    let tol = 5e-3 * a.abs() + 1e-10;
    run.check(
        "mass",
        (rep.extrapolated - a).abs() <= tol,
        format!("extrapolated {:.8e} vs monopole coefficient {:.8e} (tolerance {:.1e})", rep.extrapolated, a, tol),
    );
    let r_min = chart.domain.excision_radius.max(0.1);
    let r_max = *rep.radii.last().expect("validated radii");
    let l1 = scalar_curvature_l1(&chart, r_min, r_max, 64, &SphereRule::default());
    let Some((l1, tail)) = run.compute("scalar-curvature", l1) else { return Ok(()) };
    run.note(format!("mass {:.8e} (q = {}), ∫|R| dV = {:.4e}", rep.extrapolated, rep.fit_exponent, l1));
    let rows: Vec<Vec<String>> = rep.table().iter().map(|&(r, m, e)| vec![num(r), num(m), num(e)]).collect();
    run.csv("mass.csv", &["r", "m_r", "abs_err"], &rows)?;
    run.json(
        "mass.json",
        &json!({ "report": rep, "monopole": a, "scalar_curvature_l1": l1, "outer_shell_density": tail }),
    )
}

fn harmonic(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let Some(t) = run.triple(&chart) else { return Ok(()) };
    let tol = run.cfg.solver.tol;
    run.check(
        "harmonic",
        t.residual_norm.iter().all(|&r| r <= tol),
        format!("relative residuals {:?} (tolerance {tol:e})", t.residual_norm),
    );
    let asym = t.hessian_asymmetry();
    run.check("hessian-symmetry", asym <= 1e-12, format!("max |H − Hᵀ| = {asym:e}"));
    let Some(grad_sup) = run.compute("harmonic", (0..3).map(|a| t.grad_sup(a)).collect::<Result<Vec<_>, _>>())
    else {
        return Ok(());
    };
    let cy_r = 0.5 * run.cfg.sampling.r;
    let Some(cy) = run.compute("harmonic", (0..3).map(|a| t.cheng_yau_ratio(a, cy_r)).collect::<Result<Vec<_>, _>>())
    else {
        return Ok(());
    };
    run.json(
        "harmonic.json",
        &json!({
            "n": t.grid.n,
            "r_out": t.grid.r_out,
            "bc": t.bc,
            "normalization": t.normalization,
            "iterations": t.iterations,
            "residual_norm": t.residual_norm,
            "offsets": t.offsets,
            "divergence_l1": t.divergence_l1,
            "grad_sup": grad_sup,
            "cheng_yau_radius": cy_r,
            "cheng_yau": cy,
            "hessian_asymmetry": asym,
        }),
    )?;
    if run.cfg.wants(Format::Csv) {
        for a in 0..3 {
            let rows = line_probe(&t.grid, &t.u[a].values, a, &Vec3::zeros());
            let mut buf = Vec::new();
            let name = format!("probe_u{}.csv", a + 1);
            write_line_probe(&mut buf, &rows).map_err(|e| std::io::Error::other(e.to_string())).map_err(run.io(&name))?;
            run.write(&name, &buf)?;
        }
    }
    if run.cfg.output.dump_fields {
        let data: Vec<f64> = (0..t.grid.len()).flat_map(|i| (0..3).map(move |a| (a, i))).map(|(a, i)| t.u[a].values[i]).collect();
        let mut buf = Vec::new();
        write_field(&mut buf, &t.grid, 3, &data).map_err(|e| std::io::Error::other(e.to_string())).map_err(run.io("u.bin"))?;
        run.write("u.bin", &buf)?;
        let mut side = serde_json::to_vec_pretty(&json!({
            "file": "u.bin",
            "components": ["u1", "u2", "u3"],
            "layout": "little-endian f64, node-major, x fastest; 32-byte header",
            "grid": t.grid,
            "chart": chart,
            "bc": t.bc,
            "normalization": t.normalization,
            "offsets": t.offsets,
        }))
        .expect("sidecar serializes");
        side.push(b'\n');
        run.write("u.json", &side)?;
    }
    Ok(())
}

fn inequality(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let cert = certify_hypotheses(&chart, &SamplePolicy::default());
    let Some(mass) = run.mass(&chart) else { return Ok(()) };
    let m = mass.extrapolated;
    let Some(t) = run.triple(&chart) else { return Ok(()) };
    let eps = run.cfg.solver.eps_grad;
    let mut reports = Vec::new();
    let mut kato = Vec::new();
    for a in 0..3 {
        let r = mass_inequality_rhs(&t, &chart, a, eps, m);
        let Some(r) = run.compute("inequality", r) else { return Ok(()) };
        reports.push(r);
        let k = refined_kato_check(&t, &chart, a, eps);
        let Some(k) = run.compute("kato", k) else { return Ok(()) };
        kato.push(k);
    }
    let Some(grid) = run.compute("setup", run.cfg.grid()) else { return Ok(()) };
    let c = run.cfg.certificate.clone();
    let Some(relaxed) = run.compute("certificate", relaxed_scalar_certificate(&chart, &grid, c.x_field, c.c)) else {
        return Ok(());
    };
    let nonneg = cert.scalar_min >= -1e-12;
    for (a, r) in reports.iter().enumerate() {
        let bound = 16.0 * std::f64::consts::PI * r.grad_sup * r.mass * 1.1 + 1e-12;
        if nonneg {
            run.check(
                &format!("hessian-bound u{}", a + 1),
                r.hessian_l2 <= bound,
                format!("‖∇²u‖² = {:.4e} ≤ 16π·sup|∇u|·m·1.1 = {:.4e}", r.hessian_l2, bound),
            );
            run.check(
                &format!("slack u{}", a + 1),
                r.slack >= -1e-9,
                format!("m − rhs = {:.4e} (single grid level, not extrapolated)", r.slack),
            );
        }
        let (l, rr) = kato[a];
        run.check(
            &format!("kato u{}", a + 1),
            l <= 1.05 * rr + 1e-12,
            format!("∫|∇√|∇u||² = {l:.4e} vs ∫|∇²u|²/(4|∇u|) = {rr:.4e}"),
        );
    }
    if !nonneg {
        run.note(format!("min R = {:.3e} < 0: mass-inequality assertions skipped", cert.scalar_min));
    }
    run.note(format!("relaxed certificate: ψ L¹ = {:.4e}", relaxed.psi_l1));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .zip(&kato)
        .map(|(r, (kl, kr))| {
            vec![
                chart.family.name().into(),
                num(r.axis as f64 + 1.0),
                num(r.mass),
                num(r.rhs_integral),
                num(r.hessian_l2),
                num(r.grad_sup),
                num(r.slack),
                num(r.excluded_fraction),
                num(*kl),
                num(*kr),
                num(relaxed.psi_l1),
            ]
        })
        .collect();
    run.csv(
        "inequality.csv",
        &[
            "family",
            "axis",
            "mass",
            "rhs_integral",
            "hessian_l2",
            "grad_sup",
            "slack",
            "excluded_fraction",
            "kato_lhs",
            "kato_rhs",
            "psi_l1",
        ],
        &rows,
    )?;
    let kato: Vec<_> = kato.iter().map(|(l, r)| json!({ "lhs": l, "rhs": r })).collect();
    run.json(
        "inequality.json",
        &json!({ "hypotheses": cert, "mass": mass, "reports": reports, "kato": kato, "relaxed_certificate": relaxed }),
    )
}

fn pythagoras(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let Some(t) = run.triple(&chart) else { return Ok(()) };
    let Some(proto) = run.compute("setup", run.cfg.protocol()) else { return Ok(()) };
    let Some(recs) = run.compute("pythagoras", pythagorean_records(&chart, &t, &proto)) else { return Ok(()) };
    let summary = summarize_pythagorean(&chart, &recs);
    let failed = recs.iter().filter(|r| r.is_err()).count();
    run.check(
        "pythagoras",
        summary.is_some() && 10 * failed <= recs.len(),
        format!("{} of {} pairs failed (allowed 10%)", failed, recs.len()),
    );
    let rows: Vec<Vec<String>> = recs
        .iter()
        .enumerate()
        .map(|(k, r)| match r {
            Ok(r) => [vec![k.to_string(), r.axis.to_string()], vec3(&r.x).into(), vec3(&r.x_star).into(), vec3(&r.y).into(), vec3(&r.z).into()]
                .concat()
                .into_iter()
                .chain([r.defect, r.u_defect_same, r.u_defect_cross, r.d_xy, r.d_xz, r.d_yz].map(num))
                .chain([String::new()])
                .collect(),
            Err(e) => {
                let mut v = vec![k.to_string(), (k % 3).to_string()];
                v.extend(std::iter::repeat_n(String::new(), 18));
                v.push(e.to_string());
                v
            }
        })
        .collect();
    run.csv(
        "pythagoras.csv",
        &[
            "pair", "axis", "x1", "x2", "x3", "xs1", "xs2", "xs3", "y1", "y2", "y3", "z1", "z2", "z3", "defect",
            "u_defect_same", "u_defect_cross", "d_xy", "d_xz", "d_yz", "error",
        ],
        &rows,
    )?;
    let records: Vec<_> = recs.iter().filter_map(|r| r.as_ref().ok()).collect();
    run.json("pythagoras.json", &json!({ "summary": summary, "records": records }))
}

fn distort(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let Some(t) = run.triple(&chart) else { return Ok(()) };
    let s = &run.cfg.sampling;
    let d = gh_distortion(&chart, &t, s.r, s.n_pairs, run.cfg.seed());
    let Some(d) = run.compute("distortion", d) else { return Ok(()) };
    run.check(
        "containment",
        d.containment_excess <= 1e-9,
        format!("max |u(x)| − r − max_defect = {:.3e}", d.containment_excess),
    );
    run.note(format!("distortion: p50 {:.4e} p90 {:.4e} max {:.4e}, ortho L¹ {:.4e}", d.p50, d.p90, d.max_defect, d.ortho_l1));
    run.json("distortion.json", &d)
}

fn flow(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let Some(t) = run.triple(&chart) else { return Ok(()) };
    let Some(proto) = run.compute("setup", run.cfg.protocol()) else { return Ok(()) };
    let traces = flow_traces(&chart, &t, &proto);
    let Some(traces) = run.compute("flow", traces.into_iter().collect::<Result<Vec<_>, _>>()) else { return Ok(()) };
    let ratio = traces.iter().map(|t| t.max_displacement_ratio()).fold(0.0, f64::max);
    run.check(
        "displacement",
        ratio <= 1.001,
        format!("max d(w*, end) / (sup|∇u|·t) = {ratio:.6}"),
    );
    let err = traces.iter().map(|t| t.u_error).fold(0.0, f64::max);
    run.note(format!("flows: max |u(w) − target| = {err:.4e}"));
    let mut poly = Vec::new();
    let mut rows = Vec::new();
    for (k, tr) in traces.iter().enumerate() {
        poly.push([vec![k.to_string(), "0".into(), "start".into()], vec3(&tr.start).into()].concat());
        for (j, s) in tr.steps.iter().enumerate() {
            poly.push([vec![k.to_string(), (j + 1).to_string(), "w_star".into()], vec3(&s.w_star).into()].concat());
            poly.push([vec![k.to_string(), (j + 1).to_string(), "end".into()], vec3(&s.end).into()].concat());
        }
        rows.push(
            [vec![k.to_string()], vec3(&tr.target).into(), vec3(&tr.end).into()]
                .concat()
                .into_iter()
                .chain([tr.u_error, tr.end_distance, tr.max_step_error(), tr.max_displacement_ratio()].map(num))
                .collect(),
        );
    }
    run.csv("flow_polylines.csv", &["trace", "step", "kind", "x", "y", "z"], &poly)?;
    run.csv(
        "flows.csv",
        &[
            "trace",
            "target1",
            "target2",
            "target3",
            "end_x",
            "end_y",
            "end_z",
            "u_error",
            "end_distance",
            "max_step_error",
            "max_displacement_ratio",
        ],
        &rows,
    )?;
    run.json("flows.json", &traces)
}

fn sweep(run: &mut Run) -> Out {
    let Some(chart) = run.chart() else { return Ok(()) };
    let Some(proto) = run.compute("setup", run.cfg.protocol()) else { return Ok(()) };
    let sw = run.cfg.sweep.clone().expect("checked in run");
    let Some(reports) = run.compute("sweep", stability_sweep(&chart, &sw.parameter, &sw.values, &proto)) else {
        return Ok(());
    };
    let mut rows = Vec::new();
    let mut ineq = Vec::new();
    for r in &reports {
        let label = format!("{}={}", sw.parameter, num(r.value));
        match (&r.failed_stage, &r.error) {
            (Some(stage), err) => run.check(&label, false, format!("stage {stage} failed: {}", err.as_deref().unwrap_or(""))),
            _ => run.check(
                &label,
                r.flow_displacement_ratio_max <= 1.001,
                format!(
                    "mass {:.6e}, hessian_l2 {:.4e}, displacement ratio {:.6}",
                    r.mass_value(),
                    r.hessian_l2,
                    r.flow_displacement_ratio_max
                ),
            ),
        }
        run.json(&format!("reports/{}_{}.json", sw.parameter, num(r.value)), r)?;
        let d = r.distortion.as_ref();
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        rows.push(vec![
            r.family.clone(),
            num(r.value),
            r.n.to_string(),
            num(r.r_out),
            num(r.mass_value()),
            num(r.hessian_l2),
            num(r.grad_sup),
            num(r.ortho_l1),
            opt(d.map(|d| d.p50)),
            opt(d.map(|d| d.p90)),
            opt(d.map(|d| d.max_defect)),
            num(r.image_hausdorff),
            num(r.flow_err_max),
        ]);
        for i in &r.inequality {
            ineq.push(vec![
                r.family.clone(),
                num(r.value),
                r.n.to_string(),
                num(r.r_out),
                (i.axis + 1).to_string(),
                num(i.mass),
                num(i.rhs_integral),
                num(i.hessian_l2),
                num(i.grad_sup),
                num(i.slack),
            ]);
        }
    }
    let p = sw.parameter.as_str();
    run.csv(
        "sweep.csv",
        &[
            "family",
            p,
            "N",
            "R_out",
            "mass",
            "hessian_l2",
            "grad_sup",
            "ortho_l1",
            "defect_p50",
            "defect_p90",
            "defect_max",
            "image_hausdorff",
            "flow_err_max",
        ],
        &rows,
    )?;
    run.csv(
        "inequality_sweep.csv",
        &["family", p, "N", "R_out", "axis", "mass", "rhs_integral", "hessian_l2", "grad_sup", "slack"],
        &ineq,
    )?;
    if reports.len() >= 2 {
        let tr = sweep_trends(&reports);
        let checks = [
            ("trend mass", tr.mass),
            ("trend hessian_l2", tr.hessian_l2),
            ("trend ortho_l1", tr.ortho_l1),
            ("trend distortion p50", tr.distortion_p50),
            ("trend distortion p90", tr.distortion_p90),
            ("trend pythagorean median", tr.pythagorean_median),
            ("trend flow error", tr.flow_error),
            ("hessian bound", tr.hessian_bound),
        ];
        for (name, ok) in checks {
            let msg = if name == "hessian bound" {
                "hessian_l2 ≤ 16π·grad_sup·mass·1.1 at every point".to_string()
            } else {
                format!("strictly decreasing along {p} → 0")
            };
            run.check(name, ok, msg);
        }
        run.json("trends.json", &tr)?;
    }
    Ok(())
}
