//! Helpers shared by several integration test targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resilient_cacc::estimator::{
    estimate_attack, first_order_change, EstimatorInput, EstimatorSettings, EstimatorState,
};

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Fitted order of the remainder left after the first-order expansion of the
/// estimate around random weights, for perturbations of norm 1e-3 and below.
pub fn taylor_remainder_order(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = EstimatorSettings::default();
    let n = settings.neurons;
    let mut draw = |len: usize, s: f64| (0..len).map(|_| rng.gen_range(-s..=s)).collect::<Vec<f64>>();
    let es = EstimatorState::from_weights(settings, draw(n, 1.0), draw(2 * n, 1.0)).unwrap();
    let input = EstimatorInput { phi: draw(1, 2.0)[0] };
    let (mut dw, mut dv) = (draw(n, 1.0), draw(2 * n, 1.0));
    let norm = dw.iter().chain(&dv).map(|v| v * v).sum::<f64>().sqrt();
    dw.iter_mut().chain(dv.iter_mut()).for_each(|v| *v *= 1e-3 / norm);

    let base = es.estimate(input);
    let scales: Vec<f64> = (0..6).map(|k| 0.5f64.powi(k)).collect();
    let remainders: Vec<f64> = scales
        .iter()
        .map(|&s| {
            let wt: Vec<f64> = dw.iter().map(|v| s * v).collect();
            let vt: Vec<f64> = dv.iter().map(|v| s * v).collect();
            let w: Vec<f64> = es.w.iter().zip(&wt).map(|(a, b)| a + b).collect();
            let v: Vec<f64> = es.v.iter().zip(&vt).map(|(a, b)| a + b).collect();
            (estimate_attack(&w, &v, input) - base - first_order_change(&es, input, &wt, &vt)).abs()
        })
        .collect();
    log_log_slope(&scales, &remainders)
}
