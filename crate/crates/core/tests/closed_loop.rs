use fwmr_core::analysis::{finite_time_bound, LyapunovSample};
use fwmr_core::sim::{
    run, run_perturbed, sweep_alpha, sweep_gains, DisturbanceSpec, ScenarioSpec, Scheme,
    SimOptions, DEFAULT_RADII,
};
use fwmr_core::{ControllerGains, RobotParams, RunMetrics, SimError};
use nalgebra::Vector3;

fn params() -> RobotParams {
    RobotParams::default()
}

fn truncated(mut spec: ScenarioSpec, duration: f64) -> ScenarioSpec {
    spec.duration = duration;
    spec
}

#[test]
fn case1_settles_inside_certificate() {
    let gains = ControllerGains::default();
    let spec = ScenarioSpec::case1();
    let log = run(&spec, &params(), &gains, &SimOptions::default()).unwrap();
    let m = RunMetrics::from_log(&log, &gains).unwrap();

    // Independent V₀ from the initial errors: ν(0) = Ψ + z₂(0) puts z₂(0) on the log.
    let v0 = LyapunovSample::new(
        0.0,
        &Vector3::from(spec.initial_pose_error),
        &Vector3::from(spec.initial_velocity_error),
    )
    .total;
    let bound = finite_time_bound(v0, &gains)
        .unwrap()
        .bound
        .finite()
        .unwrap();
    assert!((bound - 6.4031).abs() < 5e-3, "{bound}");
    assert!(
        m.settling.as_f64() <= bound + spec.step,
        "{} vs {bound}",
        m.settling
    );

    let slow = ControllerGains::default().with_alpha(1.0);
    let log = run(&spec, &params(), &slow, &SimOptions::default()).unwrap();
    let m1 = RunMetrics::from_log(&log, &slow).unwrap();
    assert!(m1.settling.as_f64() > m.settling.as_f64());
}

#[test]
fn lyapunov_never_increases() {
    for spec in [ScenarioSpec::case1(), ScenarioSpec::case2()] {
        for alpha in [0.6, 0.75, 0.9, 1.0] {
            let gains = ControllerGains::default().with_alpha(alpha);
            let log = run(
                &truncated(spec, 12.0),
                &params(),
                &gains,
                &SimOptions::default(),
            )
            .unwrap();
            let m = RunMetrics::from_log(&log, &gains).unwrap();
            assert!(
                m.max_lyapunov_increase <= 1e-9,
                "α={alpha}: {}",
                m.max_lyapunov_increase
            );
        }
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let gains = ControllerGains::default();
    let spec = truncated(ScenarioSpec::case2(), 3.0);
    let a = run(&spec, &params(), &gains, &SimOptions::default()).unwrap();
    let b = run(&spec, &params(), &gains, &SimOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_disturbance_matches_plain_run() {
    let gains = ControllerGains::default();
    let spec = truncated(ScenarioSpec::case1(), 2.0);
    let a = run(&spec, &params(), &gains, &SimOptions::default()).unwrap();
    let b = run_perturbed(
        &spec,
        &params(),
        &gains,
        &SimOptions::default(),
        Vector3::zeros(),
    )
    .unwrap();
    assert_eq!(a, b);
    assert!(run_perturbed(
        &spec,
        &params(),
        &gains,
        &SimOptions::default(),
        Vector3::new(f64::NAN, 0.0, 0.0)
    )
    .is_err());
}

#[test]
fn hump_raises_x_effort_then_releases() {
    let gains = ControllerGains::default();
    let spec = ScenarioSpec::case3();
    let DisturbanceSpec::Hump(hump) = spec.disturbance else {
        panic!("case 3 carries a hump");
    };
    let log = run(&spec, &params(), &gains, &SimOptions::default()).unwrap();
    let before: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.pose[0] < hump.start - 0.2)
        .collect();
    let inside: Vec<_> = log
        .records
        .iter()
        .filter(|r| hump.contains(r.pose[0]))
        .collect();
    let after: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.pose[0] > hump.end + 0.5)
        .collect();
    assert!(!before.is_empty() && !inside.is_empty() && !after.is_empty());

    let peak = inside.iter().map(|r| r.torque[0]).fold(f64::MIN, f64::max);
    let baseline = before.last().unwrap().torque[0];
    assert!(peak - baseline > 0.3, "peak {peak} baseline {baseline}");
    // The controller supplies the missing push, so tracking barely moves.
    assert!(inside.iter().all(|r| r.pose_error.norm() < 0.05));
    for r in &after {
        assert!(
            (r.torque[0] - baseline).abs() < 1e-3,
            "{} at t={}",
            r.torque[0],
            r.time
        );
    }
}

#[test]
fn semi_implicit_euler_converges_linearly() {
    // α = 1 keeps the closed loop smooth; compare endpoints against a fine RK4 run.
    let gains = ControllerGains::diagonal([1.0; 3], [1.0; 3], 1.0);
    let base = truncated(ScenarioSpec::case2(), 2.0);
    let mut fine = base;
    fine.step = 0.00125;
    let exact = run(&fine, &params(), &gains, &SimOptions::default())
        .unwrap()
        .last()
        .copied()
        .unwrap();
    let endpoint_error = |h: f64| {
        let mut spec = base;
        spec.step = h;
        let end = *run(&spec, &params(), &gains, &SimOptions::sampled_euler())
            .unwrap()
            .last()
            .unwrap();
        assert!((end.time - 2.0).abs() < 1e-12);
        (end.pose - exact.pose).norm() + (end.velocity - exact.velocity).norm()
    };
    let e: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&h| endpoint_error(h))
        .collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.3, "errors {e:?}");
    }
}

#[test]
fn explicit_euler_is_selectable() {
    let gains = ControllerGains::default();
    let spec = truncated(ScenarioSpec::case1(), 1.0);
    let opts = SimOptions {
        scheme: Scheme::ExplicitEuler,
        substeps: 10,
        ..SimOptions::default()
    };
    let a = run(&spec, &params(), &gains, &opts).unwrap();
    let b = run(&spec, &params(), &gains, &SimOptions::default()).unwrap();
    assert_ne!(a.last().unwrap().pose, b.last().unwrap().pose);
    assert!((a.last().unwrap().pose - b.last().unwrap().pose).norm() < 1e-2);
}

#[test]
fn divergence_is_reported_with_its_step() {
    // A huge gain with a coarse held-torque step blows up.
    let gains = ControllerGains::diagonal([1.0; 3], [1e6; 3], 1.0);
    let err = run(
        &ScenarioSpec::case1(),
        &params(),
        &gains,
        &SimOptions::sampled_euler(),
    )
    .unwrap_err();
    match err {
        SimError::NonFinite { step, .. } | SimError::Control { step, .. } => assert!(step > 0),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn singleton_gain_sweep_matches_run() {
    let spec = truncated(ScenarioSpec::case1(), 10.0);
    let rows = sweep_gains(
        &spec,
        &params(),
        0.75,
        &SimOptions::default(),
        &[2.0],
        &[3.0],
    )
    .unwrap();
    assert_eq!(rows.len(), 1);
    let gains = ControllerGains::from_tuning(2.0, 3.0, 0.75);
    let m = RunMetrics::from_log(
        &run(&spec, &params(), &gains, &SimOptions::default()).unwrap(),
        &gains,
    )
    .unwrap();
    assert_eq!(rows[0].settling, m.settling);
    assert_eq!(rows[0].total_variation, m.total_variation());
}

#[test]
fn alpha_sweep_rows_follow_grid_order() {
    let spec = truncated(ScenarioSpec::case1(), 3.0);
    let grid = [0.9, 0.6, 1.0, 0.75];
    let rows = sweep_alpha(
        &spec,
        &params(),
        &ControllerGains::default(),
        &SimOptions::default(),
        &grid,
        DEFAULT_RADII,
    )
    .unwrap();
    let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    assert_eq!(alphas, grid);
    assert_eq!(rows[2].upsilon_normalized, 1.0);
    assert!(rows[1].upsilon_normalized > rows[0].upsilon_normalized);
}
