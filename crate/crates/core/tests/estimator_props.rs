mod common;

use proptest::prelude::*;
use resilient_cacc::estimator::{
    clamp_to_ball, frobenius, weight_derivative_into, EstimatorInput, EstimatorSettings, EstimatorState,
};
use resilient_cacc::sim::{ScenarioConfig, Simulation};

#[test]
fn taylor_remainder_is_second_order() {
    for seed in 0..20 {
        let order = common::taylor_remainder_order(seed);
        assert!((order - 2.0).abs() <= 0.2, "seed {seed}: fitted order {order}");
    }
}

#[test]
fn weights_freeze_once_the_loop_is_at_rest() {
    let mut c = ScenarioConfig::named("nominal").unwrap();
    c.t_end = 60.0;
    let mut sim = Simulation::new(c).unwrap();
    let mut snapshot = None;
    while !sim.is_finished() {
        if snapshot.is_none() && sim.time() >= 50.0 {
            snapshot = Some((sim.w().to_vec(), sim.v().to_vec()));
        }
        sim.step().unwrap();
    }
    let (w0, v0) = snapshot.unwrap();
    let drift = w0.iter().zip(sim.w()).chain(v0.iter().zip(sim.v())).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "weights still moving by {drift:e} over the last 10 s");
    assert_eq!(sim.weight_stats().clamp_events, 0);
}

proptest! {
    /// Along random trajectories of the projected law: on or outside the
    /// boundary layer the norm rate `2 Ŵᵀ Ẇ` is never positive, so a
    /// forward step can only grow the norm by its second-order term.
    #[test]
    fn projected_flow_never_pushes_outward(
        seed in 0u64..1000,
        phis in prop::collection::vec(-50.0f64..50.0, 200),
    ) {
        let settings = EstimatorSettings { w_max: 1.0, v_max: 1.0, ..Default::default() };
        let mut es = EstimatorState::new(settings.clone(), seed).unwrap();
        let n = es.neurons();
        let (mut dw, mut dv) = (vec![0.0; n], vec![0.0; 2 * n]);
        let dt = 1e-3;
        for phi in phis {
            weight_derivative_into(&es.w, &es.v, EstimatorInput { phi }, &settings, &mut dw, &mut dv);
            for (theta, d, radius) in [(&es.w, &dw, settings.w_max), (&es.v, &dv, settings.v_max)] {
                let rate: f64 = theta.iter().zip(d.iter()).map(|(t, v)| 2.0 * t * v).sum();
                let norm = frobenius(theta);
                if norm >= radius {
                    // Raw directions reach |φ| Γ ≈ 500; removing their radial part leaves roundoff.
                    prop_assert!(rate <= 1e-9, "outward rate {rate} at norm {norm}");
                }
                let stepped: Vec<f64> = theta.iter().zip(d.iter()).map(|(t, v)| t + dt * v).collect();
                if norm >= radius {
                    let growth = frobenius(&stepped).powi(2) - norm * norm;
                    prop_assert!(growth <= dt * dt * frobenius(d).powi(2) + 1e-11, "growth {growth}");
                }
            }
            es.w.iter_mut().zip(&dw).for_each(|(w, d)| *w += dt * d);
            es.v.iter_mut().zip(&dv).for_each(|(v, d)| *v += dt * d);
            clamp_to_ball(&mut es.w, settings.w_max);
            clamp_to_ball(&mut es.v, settings.v_max);
        }
    }
}
