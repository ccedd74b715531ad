use super::*;
use crate::{stats, Grid, MetricChart, Vec3};

const OPTS: SolverOptions = SolverOptions { tol: 1e-11, max_iter: 20_000 };

/// Regular solution of `(φ² r² h')' = 2 φ² h`, `φ = 1 + m/(2r)`, by RK4 in
/// `t = ln r`, normalized so that `h(r) = r − m/2 + O(1/r)`.
fn radial_oracle(m: f64) -> impl Fn(f64) -> f64 {
    let phi = move |r: f64| 1.0 + 0.5 * m / r;
    let rhs = move |t: f64, y: [f64; 2]| -> [f64; 2] {
        let r = t.exp();
        let p2 = phi(r).powi(2);
        [y[1] / (p2 * r), 2.0 * p2 * y[0] * r]
    };
    let (t0, t1) = ((1e-4 * m).ln(), 1e4f64.ln());
    let steps = 200_000;
    let dt = (t1 - t0) / steps as f64;
    let r0 = t0.exp();
    // inner zone: φ² r² ≈ m²/4, so h ≈ r²
    let mut y = [r0 * r0, phi(r0).powi(2) * r0 * r0 * 2.0 * r0];
    let mut table = vec![(t0, y[0])];
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * dt, [y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs(t + 0.5 * dt, [y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for c in 0..2 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        table.push((t + dt, y[0]));
    }
    let rb = t1.exp();
    let scale = (rb - 0.5 * m + 0.25 * m * m / rb) / y[0];
    move |r: f64| {
        let t = r.ln();
        let f = (t - t0) / dt;
        let k = (f.floor() as usize).min(table.len() - 4).max(1);
        // cubic Lagrange through k−1..k+2
        let s = f - k as f64;
        let v = |j: usize| table[j].1;
        let (a, b, c, d) = (v(k - 1), v(k), v(k + 1), v(k + 2));
        let val = -s * (s - 1.0) * (s - 2.0) / 6.0 * a + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * b
            - (s + 1.0) * s * (s - 2.0) / 2.0 * c
            + (s + 1.0) * s * (s - 1.0) / 6.0 * d;
        scale * val
    }
}

#[test]
fn radial_oracle_is_consistent() {
    // the oracle is built without the closed form; compare once here
    let h = radial_oracle(0.2);
    for r in [0.3, 1.0, 2.5, 5.0, 10.0] {
        let exact = r / (1.0 + 0.1 / r);
        assert!((h(r) - exact).abs() < 1e-8 * exact, "r={r}: {} vs {exact}", h(r));
    }
}

#[test]
fn flat_reproduces_coordinates() {
    let grid = Grid::new(17, 4.0).unwrap();
    let chart = MetricChart::flat(10.0);
    for axis in 0..3 {
        let (u, _) = solve_harmonic_coordinate(&chart, &grid, axis, BoundaryPolicy::Plain, &OPTS).unwrap();
        for i in 0..grid.len() {
            assert!((u.values[i] - grid.point_of(i)[axis]).abs() < 1e-8);
        }
    }
    let t = build_harmonic_triple(&chart, &grid, BoundaryPolicy::Plain, Normalization::BasePoint, &OPTS).unwrap();
    assert!(t.map(&chart.base_point).unwrap().norm() < 1e-12);
    for idx in 0..grid.len() {
        for a in 0..3 {
            let mut e = Vec3::zeros();
            e[a] = 1.0;
            assert!((t.grad[a].at(idx) - e).norm() < 1e-9, "{idx} {a} {:?}", t.grad[a].at(idx));
            assert!(t.hess[a].at(idx).abs().max() < 1e-8);
        }
    }
}

#[test]
fn zero_amplitude_conformal_equals_flat() {
    use crate::geometry::{Decay, Domain, FamilyTag};
    use std::collections::BTreeMap;
    let grid = Grid::new(17, 4.0).unwrap();
    let chart = MetricChart::new(
        FamilyTag::ConformallyFlat,
        BTreeMap::from([("A".to_string(), 0.0)]),
        Domain { half_width: 10.0, excision_radius: 0.0 },
        Decay { b: 1.0, tau: 1.0 },
    )
    .unwrap();
    let (u, _) = solve_harmonic_coordinate(&chart, &grid, 1, BoundaryPolicy::Corrected, &OPTS).unwrap();
    let (f, _) = solve_harmonic_coordinate(&MetricChart::flat(10.0), &grid, 1, BoundaryPolicy::Plain, &OPTS).unwrap();
    assert_eq!(u.values, f.values);
}

#[test]
fn axis_out_of_range() {
    let grid = Grid::new(17, 4.0).unwrap();
    let r = solve_harmonic_coordinate(&MetricChart::flat(10.0), &grid, 3, BoundaryPolicy::Plain, &OPTS);
    assert!(r.is_err());
}

#[test]
fn budget_exhaustion_is_reported() {
    let grid = Grid::new(33, 4.0).unwrap();
    let chart = MetricChart::schwarzschild(0.2, 10.0).unwrap();
    let opts = SolverOptions { tol: 1e-12, max_iter: 3 };
    let r = solve_harmonic_coordinate(&chart, &grid, 0, BoundaryPolicy::Plain, &opts);
    assert!(matches!(r, Err(crate::Error::SolverDiverged { iterations: 3, .. })));
}

fn axis_errors(n: usize, bc: BoundaryPolicy, oracle: &dyn Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let r_out = 20.0;
    let grid = Grid::new(n, r_out).unwrap();
    let chart = MetricChart::schwarzschild(0.2, 40.0).unwrap();
    let (u, _) = solve_harmonic_coordinate(&chart, &grid, 0, bc, &OPTS).unwrap();
    let c = n / 2;
    (0..n)
        .map(|i| {
            let x = grid.coord(i);
            let v = u.values[grid.index(i, c, c)];
            (x, v - x.signum() * oracle(x.abs()))
        })
        .filter(|(x, _)| x.abs() >= 1.0 && x.abs() <= 0.5 * r_out)
        .collect()
}

#[test]
fn schwarzschild_axis_profile_converges() {
    let h = radial_oracle(0.2);
    let levels: Vec<Vec<(f64, f64)>> =
        [33, 65, 129].iter().map(|&n| axis_errors(n, BoundaryPolicy::Monopole, &h)).collect();
    // pointwise relative error at the finest level
    let rel = levels[2].iter().map(|(x, e)| e.abs() / h(x.abs())).fold(0.0, f64::max);
    assert!(rel < 1e-3, "relative error {rel}");
    // order on nodes common to all levels away from the core
    let common = |lv: &Vec<(f64, f64)>| -> f64 {
        lv.iter()
            .filter(|(x, _)| x.abs() >= 2.0 && levels[0].iter().any(|(y, _)| (x - y).abs() < 1e-9))
            .map(|(_, e)| e.abs())
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = levels.iter().map(common).collect();
    let o1 = stats::observed_order(e[0], e[1], 2.0);
    let o2 = stats::observed_order(e[1], e[2], 2.0);
    assert!(o1 >= 1.8 && o2 >= 1.8, "errors {e:?}, orders {o1} {o2}");
}

#[test]
fn maximum_principle_and_symmetry() {
    let grid = Grid::new(33, 8.0).unwrap();
    let chart = MetricChart::schwarzschild(0.2, 20.0).unwrap();
    let t = build_harmonic_triple(&chart, &grid, BoundaryPolicy::Corrected, Normalization::BasePoint, &OPTS)
        .unwrap();
    for a in 0..3 {
        let vals = &t.u[a].values;
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut imin, mut imax) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, v) in vals.iter().enumerate() {
            if grid.is_boundary(i) {
                bmin = bmin.min(*v);
                bmax = bmax.max(*v);
            } else {
                imin = imin.min(*v);
                imax = imax.max(*v);
            }
        }
        assert!(imin >= bmin - 1e-9 && imax <= bmax + 1e-9);
        assert!(t.residual_norm[a] <= OPTS.tol);
    }
    assert_eq!(t.hessian_asymmetry(), 0.0);
    assert!(t.map(&chart.base_point).unwrap().norm() < 1e-12);
    let cy = t.cheng_yau_ratio(0, 1.0).unwrap();
    assert!(cy.is_finite() && cy > 0.0);
}

#[test]
fn truncation_sensitivity_decays_with_box() {
    // plain vs corrected data differ by O(m) on the boundary; the inner
    // half-box difference should shrink as the box grows
    let chart = MetricChart::schwarzschild(0.2, 100.0).unwrap();
    let mut diffs = Vec::new();
    for r_out in [8.0, 16.0, 32.0] {
        let grid = Grid::new(33, r_out).unwrap();
        let (a, _) = solve_harmonic_coordinate(&chart, &grid, 0, BoundaryPolicy::Plain, &OPTS).unwrap();
        let (b, _) = solve_harmonic_coordinate(&chart, &grid, 0, BoundaryPolicy::Corrected, &OPTS).unwrap();
        // compare gradients at fixed physical points, insensitive to constants
        let probe = |f: &crate::ScalarGridField| {
            let p = Vec3::new(2.0, 0.0, 0.0);
            let q = Vec3::new(4.0, 0.0, 0.0);
            f.sample(&q).unwrap() - f.sample(&p).unwrap()
        };
        diffs.push((probe(&a) - probe(&b)).abs());
    }
    assert!(stats::strictly_decreasing(&diffs), "{diffs:?}");
}

#[test]
fn annulus_normalization_zeroes_average() {
    let grid = Grid::new(17, 4.0).unwrap();
    let chart = MetricChart::schwarzschild(0.1, 10.0).unwrap();
    let norm = Normalization::AnnulusAverage { r0: 1.0, r1: 3.0 };
    let t = build_harmonic_triple(&chart, &grid, BoundaryPolicy::Plain, norm, &OPTS).unwrap();
    // odd symmetry: the offset is zero already, the average stays zero
    for a in 0..3 {
        assert!(t.offsets[a].abs() < 1e-9);
    }
    let t0 = build_harmonic_triple(&chart, &grid, BoundaryPolicy::Plain, Normalization::BasePoint, &OPTS).unwrap();
    assert!(t0.offsets[0] > 1.0);
}
