use resilient_cacc::plant::{leader_derivative, BoundedSignal, VehicleParams, VehicleState};
use resilient_cacc::sim::runner::{rk4_step, tracking_norm_tail, Rk4Workspace};
use resilient_cacc::sim::{compute_rmse, run_scenario, ScenarioConfig, TraceRow, SCENARIO_NAMES};

fn bits(rows: &[TraceRow]) -> Vec<u64> {
    rows.iter().flat_map(|r| r.values().map(f64::to_bits)).collect()
}

#[test]
fn identical_seed_gives_bitwise_identical_trace() {
    let mut c = ScenarioConfig::named("noisy").unwrap().with_seed(5);
    c.t_end = 5.0;
    let a = run_scenario(c.clone()).unwrap();
    let b = run_scenario(c.clone()).unwrap();
    assert_eq!(bits(&a.trace), bits(&b.trace));
    let other = run_scenario(c.with_seed(6)).unwrap();
    assert_ne!(bits(&a.trace), bits(&other.trace));
}

/// Leader alone under constant command: v(t) = e^{-at} v0 + (b u / a)(1 - e^{-at}).
#[test]
fn rk4_tracks_closed_form_speed() {
    let p = VehicleParams::default();
    let (v0, u, dt) = (10.0, 0.3, 1e-3);
    let mut x = [0.0, v0];
    let mut ws = Rk4Workspace::new(2);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        rk4_step(
            |_, s, o| {
                let (dx, dv) = leader_derivative(VehicleState::new(s[0], s[1]), u, 0.0, &p);
                o[0] = dx;
                o[1] = dv;
            },
            k as f64 * dt,
            dt,
            &mut x,
            &mut ws,
        );
        let t = (k + 1) as f64 * dt;
        let exact = (-p.a * t).exp() * v0 + p.b * u / p.a * (1.0 - (-p.a * t).exp());
        worst = worst.max((x[1] - exact).abs());
    }
    assert!(worst <= 1e-8, "max error {worst:e}");
}

/// Terminal state of the leader under a smooth command, integrated with step `dt`.
fn leader_terminal(dt: f64, t_end: f64) -> [f64; 2] {
    let p = VehicleParams::default();
    let mut x = [0.0, 10.0];
    let mut ws = Rk4Workspace::new(2);
    let steps = (t_end / dt).round() as usize;
    for k in 0..steps {
        rk4_step(
            |t, s, o| {
                let (dx, dv) = leader_derivative(VehicleState::new(s[0], s[1]), (2.0 * t).sin(), 0.01 * t.cos(), &p);
                o[0] = dx;
                o[1] = dv;
            },
            k as f64 * dt,
            dt,
            &mut x,
            &mut ws,
        );
    }
    x
}

#[test]
fn richardson_ratio_is_fourth_order() {
    let dts = [0.2, 0.1, 0.05];
    let ends: Vec<[f64; 2]> = dts.iter().map(|&dt| leader_terminal(dt, 10.0)).collect();
    for i in 0..2 {
        let coarse = (ends[0][i] - ends[1][i]).abs();
        let fine = (ends[1][i] - ends[2][i]).abs();
        let order = (coarse / fine).log2();
        assert!((order - 4.0).abs() < 0.3, "component {i}: observed order {order}");
    }
}

#[test]
fn distance_rmse_is_robust_to_halving_dt() {
    let base = ScenarioConfig::named("noise-free").unwrap();
    let mut fine = base.clone();
    fine.dt = 0.5e-3;
    let coarse = run_scenario(base).unwrap().metrics.distance_rmse;
    let fine = run_scenario(fine).unwrap().metrics.distance_rmse;
    let rel = (coarse - fine).abs() / fine;
    assert!(rel < 0.01, "distance RMSE {coarse} vs {fine}: relative change {rel}");
}

#[test]
fn tracking_error_stays_within_declared_bound() {
    for name in SCENARIO_NAMES {
        let c = ScenarioConfig::named(name).unwrap();
        let bound = c.tracking_bound;
        let out = run_scenario(c).unwrap();
        let tail = tracking_norm_tail(&out.trace, 0.25);
        assert!(tail < bound, "{name}: |(e, r)| reached {tail} over the last quarter");
    }
}

/// With no attack and no uncertainty the equilibrium e = r = 0 reproduces the
/// leader's command exactly, so the gap settles on the desired value.
#[test]
fn nominal_run_converges_to_desired_gap() {
    let c = ScenarioConfig::named("nominal").unwrap();
    let (desired, t_end) = (c.controller.desired_gap, c.t_end);
    let out = run_scenario(c).unwrap();
    let tail: Vec<&TraceRow> = out.trace.iter().filter(|r| r.t >= t_end - 10.0).collect();
    let gaps: Vec<f64> = tail.iter().map(|r| r.gap).collect();
    let rmse = compute_rmse(&gaps, &vec![desired; gaps.len()]).unwrap();
    assert!(rmse <= 0.05, "last-10 s distance RMSE {rmse}");
    let last = out.trace.last().unwrap();
    assert!(last.f_tilde.abs() < 1e-6 && last.e.abs() < 1e-3, "f_tilde {} e {}", last.f_tilde, last.e);
    assert!(!out.metrics.collision);
}

#[test]
fn noise_free_attack_is_survived() {
    let out = run_scenario(ScenarioConfig::named("noise-free").unwrap()).unwrap();
    assert!(!out.metrics.collision);
    let pre = out.trace.iter().rev().find(|r| r.t < 30.0).unwrap().gap;
    let dip = out.trace.iter().filter(|r| r.t >= 30.0).map(|r| r.gap).fold(f64::INFINITY, f64::min);
    assert!(dip < pre, "gap should dip after the attack");
    assert!((out.trace.last().unwrap().gap - 5.0).abs() < 0.01);
}

#[test]
fn uniform_disturbance_realizations_stay_contained() {
    for seed in [3, 11, 29] {
        let mut c = ScenarioConfig::named("noisy").unwrap();
        c.disturbance = BoundedSignal::uniform(-0.01, 0.01, 0);
        c.follower_disturbance = BoundedSignal::uniform(-0.01, 0.01, 0);
        c.t_end = 40.0;
        let out = run_scenario(c.with_seed(seed)).unwrap();
        assert_eq!(out.metrics.containment_rate, 1.0, "seed {seed}");
    }
}
