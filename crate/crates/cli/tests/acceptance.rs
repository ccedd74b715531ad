//! Desk-scale acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with its own harness so the lines show up in plain `cargo test`
//! output; exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use afstab_core::geodesy::{bishop_gromov_check, distance};
use afstab_core::geometry::certify_hypotheses;
use afstab_core::gh::{run_point, SweepProtocol};
use afstab_core::harmonic::{build_harmonic_triple, solve_harmonic_coordinate, SolverOptions};
use afstab_core::inequality::{extrapolate_slack, mass_inequality_rhs, relaxed_scalar_certificate, VectorFieldSpec};
use afstab_core::mass::{adm_mass, gauss_legendre, ExtrapolationModel, SphereRule, DEFAULT_FIT_THRESHOLD};
use afstab_core::rng;
use afstab_core::{
    BoundaryPolicy, Decay, Domain, FamilyTag, Grid, MetricChart, Normalization, SamplePolicy, StabilityReport, Vec3,
};
use afstab_cli::RunManifest;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scratch_dir(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn solver() -> SolverOptions {
    SolverOptions::default()
}

// ---------------------------------------------------------------- oracles

/// Schwarzschild in isotropic coordinates: `φ = 1 + m/(2r)`.
fn phi(m: f64, r: f64) -> f64 {
    1.0 + m / (2.0 * r)
}

/// Surface integrand of the mass flux for `g = φ⁴δ` with radial `φ`:
/// `m(r) = −2 r² φ³ φ'` which for Schwarzschild is `m φ(r)³`.
fn schwarzschild_mass_at(m: f64, r: f64) -> f64 {
    let dphi = -m / (2.0 * r * r);
    -2.0 * r * r * phi(m, r).powi(3) * dphi
}

/// Radial proper distance antiderivative: `∫ φ² dr`.
fn radial_distance(m: f64, r: f64) -> f64 {
    r + m * r.ln() - m * m / (4.0 * r)
}

/// Radial harmonic profile from `(φ² r² h')' = 2 φ² h`, shot inward from
/// the far field `h ≈ r − m/2` by RK4 in `ln r`.
fn radial_ode_profile(m: f64, r_far: f64, r_near: f64, steps: usize) -> impl Fn(f64) -> f64 {
    // y = (h, w) with w = φ² r² h'; d/ds = r d/dr
    let f = |s: f64, y: [f64; 2]| -> [f64; 2] {
        let r = s.exp();
        let p2 = phi(m, r).powi(2);
        [y[1] / (p2 * r), 2.0 * p2 * y[0] * r]
    };
    let (s0, s1) = (r_far.ln(), r_near.ln());
    let ds = (s1 - s0) / steps as f64;
    // far-field data from h = r/φ, accurate to O(m³/r²) at r_far
    let h0 = r_far / phi(m, r_far);
    let dh0 = (1.0 + m / r_far) / phi(m, r_far).powi(2);
    let mut y = [h0, phi(m, r_far).powi(2) * r_far * r_far * dh0];
    let mut table = vec![(s0, y[0])];
    let mut s = s0;
    for _ in 0..steps {
        let k1 = f(s, y);
        let k2 = f(s + 0.5 * ds, [y[0] + 0.5 * ds * k1[0], y[1] + 0.5 * ds * k1[1]]);
        let k3 = f(s + 0.5 * ds, [y[0] + 0.5 * ds * k2[0], y[1] + 0.5 * ds * k2[1]]);
        let k4 = f(s + ds, [y[0] + ds * k3[0], y[1] + ds * k3[1]]);
        for i in 0..2 {
            y[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        s += ds;
        table.push((s, y[0]));
    }
    move |r: f64| {
        // cubic interpolation in ln r on the uniform table
        let t = (r.ln() - s0) / ds;
        let k = (t.floor() as isize).clamp(1, table.len() as isize - 3) as usize;
        let u = t - k as f64;
        let p = [table[k - 1].1, table[k].1, table[k + 1].1, table[k + 2].1];
        p[1] + 0.5
            * u
            * (p[2] - p[0] + u * (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3] + u * (3.0 * (p[1] - p[2]) + p[3] - p[0])))
    }
}

/// Laplacian of `a · exp(−|x−c|²/w²)`.
fn gaussian_laplacian(a: f64, c: &Vec3, w: f64, x: &Vec3) -> (f64, f64) {
    let s2 = (x - c).norm_squared();
    let v = a * (-s2 / (w * w)).exp();
    (v, v * (4.0 * s2 / w.powi(4) - 6.0 / (w * w)))
}

/// Value and Laplacian of `a · exp(1 − 1/(1 − |x−c|²/w²))` inside its support.
fn bump_laplacian(a: f64, c: &Vec3, w: f64, x: &Vec3) -> (f64, f64) {
    let t = (x - c).norm_squared() / (w * w);
    if t >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - t;
    let f = a * (1.0 - 1.0 / q).exp();
    let ft = -f / (q * q);
    let ftt = f * (1.0 - 2.0 * q) / q.powi(4);
    // radial Laplacian in t = s²/w²: 4s²/w⁴ f'' + 6/w² f'
    (f, 4.0 * t / (w * w) * ftt + 6.0 / (w * w) * ft)
}

/// `ψ` L¹ norm of a negative centered bump to first order in its amplitude:
/// `8|a| ∫ (Δβ)₊ (1 + A/(2|x|)) dx` by radial Gauss–Legendre.
fn bump_psi_slope(big_a: f64, w: f64) -> f64 {
    let (x, wt) = gauss_legendre(400);
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(&wt) {
        let s = 0.5 * w * (xi + 1.0);
        let (_, lap) = bump_laplacian(1.0, &Vec3::zeros(), w, &Vec3::new(s, 0.0, 0.0));
        total += 0.5 * w * wi * 4.0 * PI * s * s * lap.max(0.0) * (1.0 + big_a / (2.0 * s));
    }
    8.0 * total
}

// ---------------------------------------------------------------- criteria

fn c1_flat() -> Outcome {
    let chart = MetricChart::flat(200.0);
    let mass = adm_mass(&chart, &[25.0, 50.0, 100.0], ExtrapolationModel::FromDecay, &SphereRule::default(), DEFAULT_FIT_THRESHOLD)
        .map_err(|e| e.to_string())?;
    let grid = Grid::new(33, 20.0).unwrap();
    let mut u_err = 0.0f64;
    for a in 0..3 {
        let (u, _) = solve_harmonic_coordinate(&chart, &grid, a, BoundaryPolicy::Corrected, &solver()).map_err(|e| e.to_string())?;
        for (i, v) in u.values.iter().enumerate() {
            u_err = u_err.max((v - grid.point_of(i)[a]).abs());
        }
    }
    let mut proto = SweepProtocol::desk(33, 20.0, 42).unwrap();
    proto.n_pairs = 60;
    proto.n_pyth_pairs = 15;
    proto.n_targets = 8;
    let rep = run_point(&chart, "none", 0.0, &proto);
    if let Some(s) = &rep.failed_stage {
        return Err(format!("flat run failed at {s}: {:?}", rep.error));
    }
    let d = rep.distortion.as_ref().unwrap();
    let p = rep.pythagorean.as_ref().unwrap();
    let defects = [
        d.max_defect,
        p.max_defect,
        p.median_u_defect_same,
        p.median_u_defect_cross,
        rep.image_hausdorff,
        rep.flow_err_max,
    ];
    let worst = defects.iter().fold(0.0f64, |a, b| a.max(*b));
    ensure(
        mass.extrapolated.abs() < 1e-10 && u_err < 1e-8 && worst < 1e-6 && p.n_failed == 0,
        format!(
            "|m| = {:.1e}, max |u − x| = {:.1e}, max defect (distortion/pythagorean/flow) = {:.1e}",
            mass.extrapolated.abs(),
            u_err,
            worst
        ),
    )
}

fn c2_mass() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for m in [0.05, 0.1, 0.2] {
        let chart = MetricChart::schwarzschild(m, 200.0).unwrap();
        let rep = adm_mass(&chart, &[25.0, 50.0, 100.0], ExtrapolationModel::FromDecay, &SphereRule::default(), DEFAULT_FIT_THRESHOLD)
            .map_err(|e| e.to_string())?;
        let integrand = rep
            .radii
            .iter()
            .zip(&rep.raw_values)
            .map(|(&r, &v)| (v - schwarzschild_mass_at(m, r)).abs() / m)
            .fold(0.0, f64::max);
        let rel = (rep.extrapolated - m).abs() / m;
        ok &= rel < 5e-3 && integrand < 1e-10;
        detail.push(format!("m={m}: rel err {rel:.1e} (surface values vs closed form {integrand:.1e})"));
    }
    ensure(ok, detail.join("; "))
}

fn c3_curvature() -> Outcome {
    let chart = MetricChart::schwarzschild(0.2, 200.0).unwrap();
    let mut r = rng::stream(3, &[1]);
    let mut worst_s = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let x = rng::uniform_in_ball(&mut r, &Vec3::zeros(), 30.0);
        if x.norm() < 0.2 {
            continue;
        }
        worst_s = worst_s.max(chart.curvature_at(&x).map_err(|e| e.to_string())?.scalar.abs());
        n += 1;
    }
    // conformally flat bump family: monopole + gaussian + compact bump
    let (ga, gc, gw) = (0.08, Vec3::new(0.4, -0.3, 0.2), 1.3);
    let (ba, bc, bw) = (-0.05, Vec3::new(-0.5, 0.6, 0.0), 2.0);
    let params = BTreeMap::from([
        ("A".to_string(), 0.1),
        ("gauss_amp".to_string(), ga),
        ("gauss_width".to_string(), gw),
        ("gauss_x".to_string(), gc[0]),
        ("gauss_y".to_string(), gc[1]),
        ("gauss_z".to_string(), gc[2]),
        ("bump0_amp".to_string(), ba),
        ("bump0_width".to_string(), bw),
        ("bump0_x".to_string(), bc[0]),
        ("bump0_y".to_string(), bc[1]),
        ("bump0_z".to_string(), bc[2]),
    ]);
    let bump = MetricChart::new(
        FamilyTag::ConformallyFlat,
        params,
        Domain { half_width: 50.0, excision_radius: 0.0 },
        Decay { b: 10.0, tau: 0.9 },
    )
    .map_err(|e| e.to_string())?;
    let mut worst_b = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let x = rng::uniform_in_ball(&mut r, &Vec3::zeros(), 4.0);
        if x.norm() < 0.3 {
            continue;
        }
        let (gv, gl) = gaussian_laplacian(ga, &gc, gw, &x);
        let (bv, bl) = bump_laplacian(ba, &bc, bw, &x);
        let p = 1.0 + 0.1 / (2.0 * x.norm()) + gv + bv;
        let expected = -8.0 * p.powi(-5) * (gl + bl);
        let got = chart_scalar(&bump, &x)?;
        worst_b = worst_b.max((got - expected).abs() / expected.abs().max(1.0));
        n += 1;
    }
    ensure(
        worst_s < 1e-8 && worst_b < 1e-9,
        format!("Schwarzschild max |R| = {worst_s:.1e}; bump family max |R − (−8φ⁻⁵Δφ)| = {worst_b:.1e}"),
    )
}

fn chart_scalar(chart: &MetricChart, x: &Vec3) -> Result<f64, String> {
    chart.curvature_at(x).map(|c| c.scalar).map_err(|e| e.to_string())
}

fn c4_harmonic_ode() -> Outcome {
    let m = 0.2;
    let r_out = 20.0;
    let chart = MetricChart::schwarzschild(m, 200.0).unwrap();
    // inward shooting amplifies the decaying r⁻² mode, so keep the span to
    // what the comparison needs
    let oracle = radial_ode_profile(m, 40.0, 1.0, 20_000);
    // the oracle itself against the closed form r/φ
    let self_check = [2.0, 3.3, 7.0, 19.0]
        .iter()
        .map(|&r| (oracle(r) - r / phi(m, r)).abs() / r)
        .fold(0.0, f64::max);
    let mut errs = Vec::new();
    let mut rel_fine = 0.0;
    for n in [33usize, 65, 129] {
        let grid = Grid::new(n, r_out).unwrap();
        let (u, _) = solve_harmonic_coordinate(&chart, &grid, 0, BoundaryPolicy::Monopole, &solver()).map_err(|e| e.to_string())?;
        let c = (n - 1) / 2;
        // nodes shared with the coarsest grid, away from the unresolved throat
        let step = (n - 1) / 32;
        let (mut e_abs, mut e_rel) = (0.0f64, 0.0f64);
        for i in (0..n).step_by(step) {
            let x = grid.coord(i);
            if x.abs() < 2.0 || i == 0 || i == n - 1 {
                continue;
            }
            let exact = x.signum() * oracle(x.abs());
            let e = (u.values[grid.index(i, c, c)] - exact).abs();
            e_abs = e_abs.max(e);
            e_rel = e_rel.max(e / exact.abs());
        }
        errs.push(e_abs);
        rel_fine = e_rel;
    }
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    ensure(
        rel_fine < 1e-3 && o1.min(o2) >= 1.8 && self_check < 1e-8,
        format!(
            "N=129 max rel err {rel_fine:.2e} (|x| ≥ 2); orders {o1:.2}, {o2:.2}; oracle vs r/φ {self_check:.1e}"
        ),
    )
}

fn c5_inequality() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for m in [0.2, 0.1, 0.05] {
        let chart = MetricChart::schwarzschild(m, 200.0).unwrap();
        let mass = adm_mass(&chart, &[25.0, 50.0, 100.0], ExtrapolationModel::FromDecay, &SphereRule::default(), DEFAULT_FIT_THRESHOLD)
            .map_err(|e| e.to_string())?
            .extrapolated;
        let mut slack = Vec::new();
        for n in [65usize, 129] {
            let grid = Grid::new(n, 20.0).unwrap();
            let t = build_harmonic_triple(&chart, &grid, BoundaryPolicy::Corrected, Normalization::BasePoint, &solver())
                .map_err(|e| e.to_string())?;
            let r = mass_inequality_rhs(&t, &chart, 0, 1e-6, mass).map_err(|e| e.to_string())?;
            slack.push(r.slack);
        }
        let (est, band) = extrapolate_slack(slack[0], slack[1], 2.0);
        ok &= est + band >= 0.0;
        detail.push(format!("m={m}: slack N65 {:.4e}, N129 {:.4e}, extrapolated {:.4e} ± {:.1e}", slack[0], slack[1], est, band));
    }
    ensure(ok, detail.join("; "))
}

struct Sweep {
    reports: Vec<StabilityReport>,
    dir: PathBuf,
}

fn run_sweep(name: &str) -> Result<Sweep, String> {
    let dir = scratch_dir(name);
    let status = Command::new(env!("CARGO_BIN_EXE_afstab"))
        .args(["sweep", "--config"])
        .arg(repo_root().join("configs/schwarzschild_sweep.toml"))
        .arg("--out")
        .arg(&dir)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("afstab sweep exited with {status}"));
    }
    let mut reports = Vec::new();
    for v in ["0.2", "0.1", "0.05", "0.025"] {
        let text = std::fs::read_to_string(dir.join(format!("reports/m_{v}.json"))).map_err(|e| e.to_string())?;
        reports.push(serde_json::from_str(&text).map_err(|e| e.to_string())?);
    }
    Ok(Sweep { reports, dir })
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > ")
}

fn c6_hessian(s: &Sweep) -> Outcome {
    let hl2: Vec<f64> = s.reports.iter().map(|r| r.hessian_l2).collect();
    let worst = s
        .reports
        .iter()
        .flat_map(|r| &r.inequality)
        .map(|i| i.hessian_l2 / (16.0 * PI * i.grad_sup * i.mass * 1.1))
        .fold(0.0, f64::max);
    ensure(
        worst <= 1.0 && decreasing(&hl2),
        format!("hessian_l2 {}; max hessian_l2 / (16π·grad_sup·m·1.1) = {worst:.3}", fmt(&hl2)),
    )
}

fn c7_bishop_gromov() -> Outcome {
    let radii = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let flat = MetricChart::flat(50.0);
    let f = bishop_gromov_check(&flat, &Vec3::zeros(), &radii, 0.1, 81).map_err(|e| e.to_string())?;
    let chart = MetricChart::schwarzschild(0.2, 200.0).unwrap();
    let kappa = certify_hypotheses(&chart, &SamplePolicy::default()).ricci_kappa;
    let sr = [0.5, 0.75, 1.0, 1.25, 1.5];
    let s = bishop_gromov_check(&chart, &Vec3::new(2.0, 0.0, 0.0), &sr, kappa, 81).map_err(|e| e.to_string())?;
    ensure(
        f.max_relative_increase <= 0.01 && s.max_relative_increase <= 0.01,
        format!(
            "largest relative ratio increase: flat κ=0.1 {:.2e}, Schwarzschild m=0.2 κ={kappa:.3e} {:.2e}",
            f.max_relative_increase, s.max_relative_increase
        ),
    )
}

fn c8_pythagorean(s: &Sweep, flat_ok: bool) -> Outcome {
    let med: Vec<f64> = s.reports.iter().map(|r| r.pythagorean.as_ref().map_or(f64::NAN, |p| p.median_defect)).collect();
    let n: Vec<usize> = s.reports.iter().map(|r| r.pythagorean.as_ref().map_or(0, |p| p.n_records)).collect();
    ensure(
        decreasing(&med) && flat_ok,
        format!("median defect {} over {:?} pairs; flat family {}", fmt(&med), n, if flat_ok { "< 1e-6" } else { "FAILED" }),
    )
}

fn c9_distortion(s: &Sweep) -> Outcome {
    let p50: Vec<f64> = s.reports.iter().map(|r| r.distortion.as_ref().map_or(f64::NAN, |d| d.p50)).collect();
    let p90: Vec<f64> = s.reports.iter().map(|r| r.distortion.as_ref().map_or(f64::NAN, |d| d.p90)).collect();
    // radial pair at m = 0.1
    let m = 0.1;
    let chart = MetricChart::schwarzschild(m, 200.0).unwrap();
    let grid = Grid::new(65, 20.0).unwrap();
    let t = build_harmonic_triple(&chart, &grid, BoundaryPolicy::Corrected, Normalization::BasePoint, &solver())
        .map_err(|e| e.to_string())?;
    let (a, b) = (4.0, 8.0);
    let (x, y) = (Vec3::new(a, 0.0, 0.0), Vec3::new(b, 0.0, 0.0));
    let d = distance(&chart, &x, &y).map_err(|e| e.to_string())?.distance;
    let du = (t.map(&y).map_err(|e| e.to_string())? - t.map(&x).map_err(|e| e.to_string())?).norm();
    let defect = (d - du).abs();
    let oracle = (radial_distance(m, b) - radial_distance(m, a)) - (b / phi(m, b) - a / phi(m, a));
    let diff = (defect - oracle.abs()).abs();
    ensure(
        decreasing(&p50) && decreasing(&p90) && diff < 1e-3,
        format!(
            "p50 {}; p90 {}; radial pair (4,8) at m=0.1: defect {defect:.5e} vs closed form {:.5e} (diff {diff:.1e})",
            fmt(&p50),
            fmt(&p90),
            oracle.abs()
        ),
    )
}

fn c10_flows(s: &Sweep, flat_ok: bool) -> Outcome {
    let err: Vec<f64> = s.reports.iter().map(|r| r.image_hausdorff).collect();
    let ratio = s
        .reports
        .iter()
        .flat_map(|r| &r.flows)
        .flat_map(|t| &t.steps)
        .filter(|st| st.displacement_bound > 0.0)
        .map(|st| st.displacement / st.displacement_bound)
        .fold(0.0, f64::max);
    let traces: usize = s.reports.iter().map(|r| r.flows.len()).sum();
    ensure(
        decreasing(&err) && ratio <= 1.001 && flat_ok && traces == 80,
        format!(
            "max |u(w) − target| {}; max d(start,end)/(grad_sup·t) = {ratio:.5} over {traces} traces; flat {}",
            fmt(&err),
            if flat_ok { "exact" } else { "FAILED" }
        ),
    )
}

fn c11_certificate() -> Outcome {
    let grid = Grid::new(65, 5.0).unwrap();
    let zero = |chart: &MetricChart| relaxed_scalar_certificate(chart, &grid, VectorFieldSpec::Zero, 1.0).map(|c| c.psi_l1);
    let flat = zero(&MetricChart::flat(200.0)).map_err(|e| e.to_string())?;
    let schw = zero(&MetricChart::schwarzschild(0.1, 200.0).unwrap()).map_err(|e| e.to_string())?;
    let (big_a, w) = (0.1, 2.0);
    let amps = [0.02, 0.01, 0.005, 0.0025];
    let mut psi = Vec::new();
    for a in amps {
        let chart = MetricChart::new(
            FamilyTag::Perturbed,
            BTreeMap::from([("A".to_string(), big_a), ("bump0_amp".to_string(), -a), ("bump0_width".to_string(), w)]),
            Domain { half_width: 200.0, excision_radius: 0.0 },
            Decay { b: 10.0, tau: 0.9 },
        )
        .map_err(|e| e.to_string())?;
        psi.push(zero(&chart).map_err(|e| e.to_string())?);
    }
    // least-squares line through the amplitudes; linear means slope ≈ ψ/a, intercept ≈ 0
    let k = amps.len() as f64;
    let (sx, sy) = (amps.iter().sum::<f64>(), psi.iter().sum::<f64>());
    let sxx: f64 = amps.iter().map(|a| a * a).sum();
    let sxy: f64 = amps.iter().zip(&psi).map(|(a, p)| a * p).sum();
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let intercept = (sy - slope * sx) / k;
    let oracle = bump_psi_slope(big_a, w);
    let rel = (slope - oracle).abs() / oracle;
    ensure(
        flat == 0.0 && schw == 0.0 && rel < 0.1 && intercept.abs() < 0.1 * slope * amps[3],
        format!(
            "ψ L¹: flat {flat}, Schwarzschild {schw}; negative bump slope {slope:.4} vs oracle {oracle:.4} ({:.1}%), intercept {intercept:.1e}",
            100.0 * rel
        ),
    )
}

fn c12_determinism(a: &Sweep) -> Outcome {
    let b = run_sweep("sweep_b")?;
    let manifest = |d: &Path| -> Result<RunManifest, String> {
        serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())
    };
    let (ma, mb) = (manifest(&a.dir)?, manifest(&b.dir)?);
    let mut diffs = Vec::new();
    for art in &ma.artifacts {
        let x = std::fs::read(a.dir.join(&art.path)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.dir.join(&art.path)).unwrap_or_default();
        if x != y {
            diffs.push(art.path.clone());
        }
    }
    let broken = ma.verify(&a.dir);
    ensure(
        diffs.is_empty() && ma.without_timestamps() == mb.without_timestamps() && broken.is_empty(),
        format!(
            "{} artifacts compared, {} differ {:?}; manifests equal up to timestamps: {}",
            ma.artifacts.len(),
            diffs.len(),
            diffs,
            ma.without_timestamps() == mb.without_timestamps()
        ),
    )
}

fn main() {
    // cargo passes harness flags (e.g. --nocapture, filters); nothing here
    // is filterable, so they are ignored
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        let (tag, detail) = match &o {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("criterion {n:>2} [{tag}] {name}: {detail}");
        results.push((n, name, o));
    };
    let flat = c1_flat();
    let flat_ok = flat.is_ok();
    report(1, "flat exactness", flat);
    report(2, "Schwarzschild mass", c2_mass());
    report(3, "curvature oracles", c3_curvature());
    report(4, "harmonic ODE oracle", c4_harmonic_ode());
    report(5, "mass inequality slack", c5_inequality());
    let sweep = run_sweep("sweep_a");
    let with_sweep = |f: &dyn Fn(&Sweep) -> Outcome| match &sweep {
        Ok(s) => f(s),
        Err(e) => Err(format!("sweep failed: {e}")),
    };
    report(6, "L² Hessian bound", with_sweep(&c6_hessian));
    report(7, "Bishop–Gromov", c7_bishop_gromov());
    report(8, "almost-Pythagorean", with_sweep(&|s| c8_pythagorean(s, flat_ok)));
    report(9, "GH distortion", with_sweep(&c9_distortion));
    report(10, "surjectivity flows", with_sweep(&|s| c10_flows(s, flat_ok)));
    report(11, "relaxed certificate", c11_certificate());
    report(12, "determinism", with_sweep(&c12_determinism));
    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
