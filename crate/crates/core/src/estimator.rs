//! Two-layer neural estimator of the injected attack.
//!
//! `f̂ = Ŵᵀ σ(V̂ᵀ δ)` with `δ = [1, φ]ᵀ`, `φ = b r`, logistic `σ`, and the
//! adaptation laws
//!
//! ```text
//! Ŵ̇ = proj(Γ1 σ φ)        V̂̇ = proj(Γ2 φ δ Ŵᵀ σ')
//! ```
//!
//! Weights are stored flat so the simulator can integrate them in place:
//! `w[j]` is the outer weight of neuron `j` and `v[k * n + j]` the inner
//! weight from input `k` to neuron `j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("time {t} precedes the reference time {t0}")]
    BeforeReference { t: f64, t0: f64 },
    #[error("invalid estimator setting: {0}")]
    Invalid(String),
    #[error("weight shape mismatch: expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub neurons: usize,
    pub gamma_w: f64,
    pub gamma_v: f64,
    pub w_max: f64,
    pub v_max: f64,
    /// Inner weights start uniform in `[-init_spread, init_spread]`.
    pub init_spread: f64,
    /// Relative width of the projection boundary layer.
    pub boundary_layer: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            neurons: 10,
            gamma_w: 10.0,
            gamma_v: 10.0,
            w_max: 20.0,
            v_max: 20.0,
            init_spread: 0.1,
            boundary_layer: 0.01,
        }
    }
}

impl EstimatorSettings {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |m: String| Err(EstimatorError::Invalid(m));
        if self.neurons == 0 {
            return bad("neurons must be positive".into());
        }
        for (name, v) in
            [("gamma_w", self.gamma_w), ("gamma_v", self.gamma_v), ("w_max", self.w_max), ("v_max", self.v_max)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.init_spread >= 0.0) {
            return bad(format!("init_spread must be nonnegative, got {}", self.init_spread));
        }
        if !(self.boundary_layer > 0.0 && self.boundary_layer < 1.0) {
            return bad(format!("boundary_layer must lie in (0, 1), got {}", self.boundary_layer));
        }
        Ok(())
    }
}

/// Estimator input `δ = [1, φ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorInput {
    pub phi: f64,
}

impl EstimatorInput {
    /// `φ = b r`.
    pub fn from_error(b: f64, r: f64) -> Self {
        Self { phi: b * r }
    }

    pub fn delta(&self) -> [f64; 2] {
        [1.0, self.phi]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub settings: EstimatorSettings,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl EstimatorState {
    /// Zero outer weights, inner weights drawn from `seed`.
    pub fn new(settings: EstimatorSettings, seed: u64) -> Result<Self, EstimatorError> {
        settings.validate()?;
        let n = settings.neurons;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = settings.init_spread;
        let v = (0..2 * n).map(|_| if s > 0.0 { rng.gen_range(-s..=s) } else { 0.0 }).collect();
        Ok(Self { settings, w: vec![0.0; n], v })
    }

    pub fn from_weights(settings: EstimatorSettings, w: Vec<f64>, v: Vec<f64>) -> Result<Self, EstimatorError> {
        settings.validate()?;
        let n = settings.neurons;
        if w.len() != n {
            return Err(EstimatorError::Shape { expected: n, found: w.len() });
        }
        if v.len() != 2 * n {
            return Err(EstimatorError::Shape { expected: 2 * n, found: v.len() });
        }
        Ok(Self { settings, w, v })
    }

    pub fn neurons(&self) -> usize {
        self.settings.neurons
    }

    pub fn w_norm(&self) -> f64 {
        frobenius(&self.w)
    }

    pub fn v_norm(&self) -> f64 {
        frobenius(&self.v)
    }

    pub fn estimate(&self, input: EstimatorInput) -> f64 {
        estimate_attack(&self.w, &self.v, input)
    }
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn frobenius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Maps elapsed time onto `[0, 1)`.
pub fn time_to_compact(t: f64, t0: f64, c_f: f64) -> Result<f64, EstimatorError> {
    if t < t0 {
        return Err(EstimatorError::BeforeReference { t, t0 });
    }
    if !(c_f > 0.0) {
        return Err(EstimatorError::Invalid(format!("c_f must be positive, got {c_f}")));
    }
    let s = c_f * (t - t0);
    Ok(s / (s + 1.0))
}

#[inline]
fn hidden(v: &[f64], n: usize, j: usize, delta: [f64; 2]) -> f64 {
    v[j] * delta[0] + v[n + j] * delta[1]
}

/// `f̂ = Ŵᵀ σ(V̂ᵀ δ)`.
pub fn estimate_attack(w: &[f64], v: &[f64], input: EstimatorInput) -> f64 {
    let n = w.len();
    let delta = input.delta();
    (0..n).map(|j| w[j] * logistic(hidden(v, n, j, delta))).sum()
}

pub fn estimation_error(f_true: f64, f_hat: f64) -> f64 {
    f_true - f_hat
}

/// Smooth radial projection of the direction `y` for a parameter `theta`
/// confined to the ball of radius `radius`.
///
/// Inside `(1 - layer) * radius`, or when `y` points inward, `y` is returned
/// unchanged. Across the boundary layer the outward radial component is faded
/// out linearly in `‖θ‖²`, reaching zero at the radius.
pub fn project(theta: &[f64], y: &mut [f64], radius: f64, layer: f64) {
    let norm2: f64 = theta.iter().map(|t| t * t).sum();
    let r0 = (1.0 - layer) * radius;
    if norm2 <= r0 * r0 {
        return;
    }
    let dot: f64 = theta.iter().zip(y.iter()).map(|(t, v)| t * v).sum();
    if dot <= 0.0 {
        return;
    }
    let c = ((norm2 - r0 * r0) / (radius * radius - r0 * r0)).clamp(0.0, 1.0);
    let k = c * dot / norm2;
    for (yi, ti) in y.iter_mut().zip(theta) {
        *yi -= k * ti;
    }
}

/// Rescales `theta` onto the ball if numerical integration left it outside.
pub fn clamp_to_ball(theta: &mut [f64], radius: f64) {
    let norm = frobenius(theta);
    if norm > radius {
        let k = radius / norm;
        theta.iter_mut().for_each(|t| *t *= k);
    }
}

/// Projected adaptation directions written into `dw` and `dv`.
pub fn weight_derivative_into(
    w: &[f64],
    v: &[f64],
    input: EstimatorInput,
    settings: &EstimatorSettings,
    dw: &mut [f64],
    dv: &mut [f64],
) {
    let n = w.len();
    let delta = input.delta();
    let phi = input.phi;
    for j in 0..n {
        let s = logistic(hidden(v, n, j, delta));
        dw[j] = settings.gamma_w * s * phi;
        let g = settings.gamma_v * phi * w[j] * s * (1.0 - s);
        dv[j] = g * delta[0];
        dv[n + j] = g * delta[1];
    }
    project(w, dw, settings.w_max, settings.boundary_layer);
    project(v, dv, settings.v_max, settings.boundary_layer);
}

pub fn weight_derivative(es: &EstimatorState, input: EstimatorInput) -> (Vec<f64>, Vec<f64>) {
    let mut dw = vec![0.0; es.w.len()];
    let mut dv = vec![0.0; es.v.len()];
    weight_derivative_into(&es.w, &es.v, input, &es.settings, &mut dw, &mut dv);
    (dw, dv)
}

/// First-order change of `f̂` for weight perturbations `(w_tilde, v_tilde)`:
/// `W̃ᵀ σ(V̂ᵀδ) + Ŵᵀ σ'(V̂ᵀδ) Ṽᵀ δ`.
pub fn first_order_change(es: &EstimatorState, input: EstimatorInput, w_tilde: &[f64], v_tilde: &[f64]) -> f64 {
    let n = es.w.len();
    let delta = input.delta();
    (0..n)
        .map(|j| {
            let s = logistic(hidden(&es.v, n, j, delta));
            w_tilde[j] * s + es.w[j] * s * (1.0 - s) * hidden(v_tilde, n, j, delta)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn settings(n: usize) -> EstimatorSettings {
        EstimatorSettings { neurons: n, ..Default::default() }
    }

    #[test]
    fn compact_time_examples() {
        assert_eq!(time_to_compact(3.0, 3.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(time_to_compact(1.0, 0.0, 1.0).unwrap(), 0.5);
        assert!(time_to_compact(1e9, 0.0, 1.0).unwrap() < 1.0);
        assert!(time_to_compact(2.0, 0.0, 1.0).unwrap() > time_to_compact(1.0, 0.0, 1.0).unwrap());
        assert!(matches!(time_to_compact(0.0, 1.0, 1.0), Err(EstimatorError::BeforeReference { .. })));
    }

    #[test]
    fn estimate_examples() {
        let es = EstimatorState::new(settings(10), 7).unwrap();
        assert_eq!(es.estimate(EstimatorInput { phi: 3.0 }), 0.0);
        let es = EstimatorState::from_weights(settings(4), vec![0.5; 4], vec![0.0; 8]).unwrap();
        assert_abs_diff_eq!(es.estimate(EstimatorInput { phi: -2.0 }), 0.5 * 2.0, epsilon = 1e-15);
        let es = EstimatorState::from_weights(settings(1), vec![1.0], vec![0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(es.estimate(EstimatorInput { phi: 1.0 }), 0.622_459_331_201_854_6, epsilon = 1e-12);
    }

    #[test]
    fn estimation_error_examples() {
        assert_eq!(estimation_error(0.5, 0.5), 0.0);
        assert_eq!(estimation_error(0.5, 0.0), 0.5);
        assert_eq!(estimation_error(0.0, 0.1), -0.1);
    }

    #[test]
    fn seeded_init_is_reproducible_and_bounded() {
        let a = EstimatorState::new(settings(10), 42).unwrap();
        let b = EstimatorState::new(settings(10), 42).unwrap();
        assert_eq!(a, b);
        assert!(a.v.iter().all(|v| v.abs() <= 0.1));
        assert!(a.w.iter().all(|w| *w == 0.0));
        assert_ne!(a.v, EstimatorState::new(settings(10), 43).unwrap().v);
    }

    #[test]
    fn no_adaptation_at_zero_phi() {
        let es = EstimatorState::from_weights(settings(3), vec![1.0, -2.0, 0.5], vec![0.3; 6]).unwrap();
        let (dw, dv) = weight_derivative(&es, EstimatorInput { phi: 0.0 });
        assert!(dw.iter().chain(&dv).all(|x| *x == 0.0));
    }

    #[test]
    fn interior_projection_is_identity() {
        let es = EstimatorState::from_weights(settings(2), vec![1.0, 2.0], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let input = EstimatorInput { phi: 1.3 };
        let (dw, dv) = weight_derivative(&es, input);
        let delta = input.delta();
        for j in 0..2 {
            let s = logistic(es.v[j] * delta[0] + es.v[2 + j] * delta[1]);
            assert_abs_diff_eq!(dw[j], 10.0 * s * 1.3, epsilon = 1e-12);
            assert_abs_diff_eq!(dv[2 + j], 10.0 * 1.3 * delta[1] * es.w[j] * s * (1.0 - s), epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_projection_removes_outward_component() {
        let s = settings(2);
        let w = vec![20.0, 0.0];
        let mut dir = vec![5.0, 1.0];
        project(&w, &mut dir, s.w_max, s.boundary_layer);
        assert_abs_diff_eq!(dir[0], 0.0);
        assert_abs_diff_eq!(dir[1], 1.0);
        // one explicit step does not grow the norm beyond the radius to first order
        let next: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + 1e-3 * b).collect();
        let d_norm2 = 2.0 * w.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
        assert!(d_norm2 <= 0.0);
        assert!(frobenius(&next) - 20.0 < 1e-6);
    }

    #[test]
    fn inward_direction_untouched_on_boundary() {
        let w = vec![0.0, 20.0];
        let mut dir = vec![1.0, -3.0];
        project(&w, &mut dir, 20.0, 0.01);
        assert_eq!(dir, vec![1.0, -3.0]);
    }

    #[test]
    fn clamp_rescales_only_outside() {
        let mut t = vec![3.0, 4.0];
        clamp_to_ball(&mut t, 10.0);
        assert_eq!(t, vec![3.0, 4.0]);
        clamp_to_ball(&mut t, 2.5);
        assert_abs_diff_eq!(frobenius(&t), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn invalid_settings_rejected() {
        assert!(EstimatorState::new(EstimatorSettings { neurons: 0, ..Default::default() }, 1).is_err());
        assert!(EstimatorState::new(EstimatorSettings { w_max: -1.0, ..Default::default() }, 1).is_err());
        assert!(EstimatorState::from_weights(settings(2), vec![0.0; 3], vec![0.0; 4]).is_err());
    }

    proptest! {
        #[test]
        fn estimate_bounded_by_norm(
            w in proptest::collection::vec(-20.0f64..20.0, 6),
            v in proptest::collection::vec(-5.0f64..5.0, 12),
            phi in -50.0f64..50.0,
        ) {
            let bound = frobenius(&w) * (w.len() as f64).sqrt();
            let f_hat = estimate_attack(&w, &v, EstimatorInput { phi });
            prop_assert!(f_hat.abs() <= bound + 1e-12);
        }

        #[test]
        fn projection_never_increases_norm_rate_on_the_sphere(
            dir in proptest::collection::vec(-10.0f64..10.0, 4),
            raw in proptest::collection::vec(-1.0f64..1.0, 4),
            scale in 0.99f64..=1.0,
        ) {
            let n = frobenius(&raw);
            prop_assume!(n > 1e-6);
            let theta: Vec<f64> = raw.iter().map(|x| x / n * 20.0 * scale).collect();
            let mut y = dir.clone();
            project(&theta, &mut y, 20.0, 0.01);
            let dot: f64 = theta.iter().zip(&y).map(|(a, b)| a * b).sum();
            if scale == 1.0 {
                prop_assert!(dot <= 1e-9);
            }
            // never pushes outward harder than the raw direction
            let raw_dot: f64 = theta.iter().zip(&dir).map(|(a, b)| a * b).sum();
            prop_assert!(dot <= raw_dot.max(0.0) + 1e-9);
        }
    }
}
