use super::*;
use crate::harmonic::{build_harmonic_triple, BoundaryPolicy, HarmonicTriple, Normalization, SolverOptions};
use crate::{Grid, MetricChart, Vec3};

fn triple(chart: &MetricChart, n: usize, r_out: f64) -> HarmonicTriple {
    let grid = Grid::new(n, r_out).unwrap();
    build_harmonic_triple(chart, &grid, BoundaryPolicy::Corrected, Normalization::BasePoint, &SolverOptions::default())
        .unwrap()
}

#[test]
fn flat_distortion_vanishes() {
    let chart = MetricChart::flat(40.0);
    let t = triple(&chart, 17, 8.0);
    let rep = gh_distortion(&chart, &t, 3.0, 20, 5).unwrap();
    assert!(rep.max_defect < 1e-6, "{rep:?}");
    assert!(rep.ortho_l1 < 1e-8);
    assert!(rep.p50 <= rep.p90 && rep.p90 <= rep.p99 && rep.p99 <= rep.max_defect);
    assert!(rep.centering_excess <= 1e-9 && rep.containment_excess <= 1e-9);
}

#[test]
fn flat_flow_step_is_translation() {
    let chart = MetricChart::flat(40.0).with_base_point(Vec3::zeros());
    let t = triple(&chart, 17, 8.0);
    let fp = FlowParams { rho: 0.5, n_samples: 4, ball_r: 4.0, seed: 1 };
    let s = gradient_flow_step(&chart, &t, &Vec3::zeros(), 0, 2.0, &fp, &[0]).unwrap();
    assert!((s.end - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-9);
    assert!(s.u_error_vec.norm() < 1e-9);
    assert!(s.displacement <= s.displacement_bound * 1.001);
    // precondition d(p, start) + C t + ρ < r
    assert!(gradient_flow_step(&chart, &t, &Vec3::zeros(), 0, 3.8, &fp, &[0]).is_err());
}

#[test]
fn flat_reach_point() {
    let chart = MetricChart::flat(40.0);
    let t = triple(&chart, 17, 8.0);
    let fp = FlowParams { rho: 0.5, n_samples: 4, ball_r: 4.0 * 2.0, seed: 1 };
    let target = Vec3::new(1.0, -0.5, 2.0);
    let tr = reach_point(&chart, &t, &target, 3.0, &fp, &[0]).unwrap();
    assert!((tr.end - (chart.base_point + target)).norm() < 1e-8);
    assert!(tr.u_error < 1e-8);
    assert!(reach_point(&chart, &t, &Vec3::new(3.0, 0.0, 0.0), 3.0, &fp, &[0]).is_err());
}

#[test]
fn schwarzschild_flow_displacement_bound() {
    // |∇u|² ≈ φ⁻⁶ along the flow, so the step error is about 3m/r per unit time
    let mut errs = Vec::new();
    for m in [0.1, 0.05] {
        let chart = MetricChart::schwarzschild(m, 40.0).unwrap().with_base_point(Vec3::new(4.0, 0.0, 0.0));
        let t = triple(&chart, 33, 12.0);
        let fp = FlowParams { rho: 0.5, n_samples: 4, ball_r: 6.0, seed: 3 };
        let s = gradient_flow_step(&chart, &t, &chart.base_point, 1, 1.0, &fp, &[0]).unwrap();
        assert!(s.displacement <= s.displacement_bound * 1.001, "{s:?}");
        errs.push(s.u_error_vec.norm());
    }
    assert!(errs[0] < 0.15 && errs[1] < errs[0], "{errs:?}");
}

#[test]
fn small_sweep_point_runs() {
    let chart = MetricChart::schwarzschild(0.1, 200.0).unwrap().with_base_point(Vec3::new(4.0, 0.0, 0.0));
    let mut proto = SweepProtocol::desk(33, 16.0, 11).unwrap();
    proto.n_pairs = 8;
    proto.n_pyth_pairs = 3;
    proto.n_targets = 2;
    proto.r = 2.0;
    proto.target_radius = 1.5;
    let rep = run_point(&chart, "m", 0.1, &proto);
    assert!(rep.failed_stage.is_none(), "{:?} {:?}", rep.failed_stage, rep.error);
    assert!((rep.mass_value() - 0.1).abs() < 5e-4);
    assert_eq!(rep.flows.len(), 2);
    let again = run_point(&chart, "m", 0.1, &proto);
    assert_eq!(serde_json::to_string(&rep).unwrap(), serde_json::to_string(&again).unwrap());
}
