//! Ground-truth vehicle models, the FDI attack on the V2V command channel,
//! and bounded disturbance/noise generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::interval_algebra::Matrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("vehicle parameters must satisfy a > 0, b > 0, length >= 0 (got a={a}, b={b}, length={length})")]
    InvalidParams { a: f64, b: f64, length: f64 },
    #[error("signal bounds inverted: lower {lower} > upper {upper}")]
    InvertedBounds { lower: f64, upper: f64 },
    #[error("signal generator can leave its declared bounds [{lower}, {upper}]: {detail}")]
    GeneratorOutOfBounds { lower: f64, upper: f64, detail: String },
    #[error("attack can exceed its bound {bound}: {detail}")]
    AttackOutOfBounds { bound: f64, detail: String },
    #[error("custom attack samples must be non-empty with strictly increasing times")]
    BadSamples,
}

/// Longitudinal model parameters `(a, b)` and vehicle length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Drag coefficient, 1/s.
    pub a: f64,
    /// Input gain.
    pub b: f64,
    /// Vehicle length, m.
    pub length: f64,
}

impl VehicleParams {
    pub const IDENTIFIED_A: f64 = 0.1413;
    pub const IDENTIFIED_B: f64 = 6.6870;
    pub const DEFAULT_LENGTH: f64 = 4.5;

    pub fn new(a: f64, b: f64, length: f64) -> Result<Self, PlantError> {
        let p = Self { a, b, length };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if self.a > 0.0 && self.b > 0.0 && self.length >= 0.0 {
            Ok(())
        } else {
            Err(PlantError::InvalidParams { a: self.a, b: self.b, length: self.length })
        }
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { a: Self::IDENTIFIED_A, b: Self::IDENTIFIED_B, length: Self::DEFAULT_LENGTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// Position, m.
    pub x: f64,
    /// Velocity, m/s.
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x, self.v]
    }
}

/// `(ẋ, v̇) = (v, -a v + b u + d)`.
pub fn follower_derivative(state: VehicleState, u: f64, d: f64, params: &VehicleParams) -> (f64, f64) {
    (state.v, -params.a * state.v + params.b * u + d)
}

/// The leader obeys the same model; kept separate so call sites read as the equations do.
pub fn leader_derivative(state: VehicleState, u: f64, d: f64, params: &VehicleParams) -> (f64, f64) {
    follower_derivative(state, u, d, params)
}

/// Radar velocity measurement `y = v + θ`.
pub fn leader_output(state: VehicleState, noise: f64) -> f64 {
    state.v + noise
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackKind {
    None,
    /// Zero before `step_time`, `magnitude` from then on.
    Step {
        step_time: f64,
        magnitude: f64,
    },
    /// Piecewise constant: `values[k]` holds on `[times[k], times[k+1])`, zero before `times[0]`.
    Samples {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

/// FDI signal `f(t)` added to the transmitted leader command, with its declared bound `f̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSignal {
    #[serde(flatten)]
    pub kind: AttackKind,
    /// Known bound on `|f(t)|`.
    pub bound: f64,
}

impl AttackSignal {
    pub fn none() -> Self {
        Self { kind: AttackKind::None, bound: 0.0 }
    }

    /// Step attack whose declared bound is its own magnitude.
    pub fn step(step_time: f64, magnitude: f64) -> Self {
        Self { kind: AttackKind::Step { step_time, magnitude }, bound: magnitude.abs() }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.bound >= 0.0) {
            return Err(PlantError::AttackOutOfBounds { bound: self.bound, detail: "negative bound".into() });
        }
        match &self.kind {
            AttackKind::None => Ok(()),
            AttackKind::Step { magnitude, .. } => {
                if magnitude.abs() <= self.bound {
                    Ok(())
                } else {
                    Err(PlantError::AttackOutOfBounds {
                        bound: self.bound,
                        detail: format!("step magnitude {magnitude}"),
                    })
                }
            }
            AttackKind::Samples { times, values } => {
                if times.is_empty() || times.len() != values.len() || times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(PlantError::BadSamples);
                }
                match values.iter().find(|v| v.abs() > self.bound) {
                    Some(v) => Err(PlantError::AttackOutOfBounds { bound: self.bound, detail: format!("sample {v}") }),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            AttackKind::None => 0.0,
            AttackKind::Step { step_time, magnitude } => {
                if t < *step_time {
                    0.0
                } else {
                    *magnitude
                }
            }
            AttackKind::Samples { times, values } => match times.partition_point(|&s| s <= t) {
                0 => 0.0,
                k => values[k - 1],
            },
        }
    }

    /// Time the attack first becomes active, if ever.
    pub fn onset(&self) -> Option<f64> {
        match &self.kind {
            AttackKind::None => None,
            AttackKind::Step { step_time, magnitude } => (*magnitude != 0.0).then_some(*step_time),
            AttackKind::Samples { times, values } => {
                times.iter().zip(values).find(|(_, v)| **v != 0.0).map(|(t, _)| *t)
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match &self.kind {
            AttackKind::None => 0.0,
            AttackKind::Step { magnitude, .. } => magnitude.abs(),
            AttackKind::Samples { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// `π(u) = u + f(t)`.
pub fn apply_attack(u_leader: f64, attack: &AttackSignal, t: f64) -> f64 {
    u_leader + attack.value(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalKind {
    Constant {
        value: f64,
    },
    /// `offset + amplitude * sin(omega * t + phase)`.
    Sinusoid {
        amplitude: f64,
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// i.i.d. uniform on `[lower, upper]`, one draw per call.
    Uniform {
        seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

/// A disturbance or noise channel with known bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSignal {
    pub lower: f64,
    pub upper: f64,
    #[serde(flatten)]
    pub kind: SignalKind,
}

impl BoundedSignal {
    pub fn zero() -> Self {
        Self { lower: 0.0, upper: 0.0, kind: SignalKind::Constant { value: 0.0 } }
    }

    pub fn sinusoid(amplitude: f64) -> Self {
        Self {
            lower: -amplitude.abs(),
            upper: amplitude.abs(),
            kind: SignalKind::Sinusoid { amplitude, omega: 1.0, phase: 0.0, offset: 0.0 },
        }
    }

    pub fn uniform(lower: f64, upper: f64, seed: u64) -> Self {
        Self { lower, upper, kind: SignalKind::Uniform { seed } }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let (lower, upper) = (self.lower, self.upper);
        if !(lower <= upper) {
            return Err(PlantError::InvertedBounds { lower, upper });
        }
        let out = |detail: String| Err(PlantError::GeneratorOutOfBounds { lower, upper, detail });
        match self.kind {
            SignalKind::Constant { value } if !(lower <= value && value <= upper) => out(format!("constant {value}")),
            SignalKind::Sinusoid { amplitude, offset, .. }
                if !(lower <= offset - amplitude.abs() && offset + amplitude.abs() <= upper) =>
            {
                out(format!("sinusoid offset {offset} amplitude {amplitude}"))
            }
            _ => Ok(()),
        }
    }

    pub fn generator(&self) -> SignalGenerator {
        let seed = match self.kind {
            SignalKind::Uniform { seed } => seed,
            _ => 0,
        };
        SignalGenerator { signal: self.clone(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

/// Stateful sampler for a [`BoundedSignal`]; deterministic for a fixed seed and call sequence.
#[derive(Debug, Clone)]
pub struct SignalGenerator {
    signal: BoundedSignal,
    rng: ChaCha8Rng,
}

impl SignalGenerator {
    pub fn signal(&self) -> &BoundedSignal {
        &self.signal
    }

    pub fn sample(&mut self, t: f64) -> f64 {
        let s = &self.signal;
        let raw = match s.kind {
            SignalKind::Constant { value } => value,
            SignalKind::Sinusoid { amplitude, omega, phase, offset } => offset + amplitude * (omega * t + phase).sin(),
            SignalKind::Uniform { .. } => {
                if s.upper > s.lower {
                    self.rng.gen_range(s.lower..=s.upper)
                } else {
                    s.lower
                }
            }
        };
        // Rounding in offset + amplitude*sin can step one ulp past the envelope.
        raw.clamp(s.lower, s.upper)
    }
}

pub fn sample_signal(generator: &mut SignalGenerator, t: f64) -> f64 {
    generator.sample(t)
}

/// `(A, B, W, C, V)` of the leader seen from the follower.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantMatrices {
    pub a: Matrix,
    pub b: Matrix,
    pub w: Matrix,
    pub c: Matrix,
    pub v: Matrix,
}

impl PlantMatrices {
    pub fn n_states(&self) -> usize {
        self.a.rows()
    }
}

pub fn build_plant_matrices(params: &VehicleParams) -> PlantMatrices {
    PlantMatrices {
        a: Matrix::from_rows(&[[0.0, 1.0], [0.0, -params.a]]).expect("static shape"),
        b: Matrix::column(&[0.0, params.b]),
        w: Matrix::column(&[0.0, 1.0]),
        c: Matrix::row(&[0.0, 1.0]),
        v: Matrix::column(&[1.0]),
    }
}

/// Leader command schedule: piecewise-constant cruise targets.
///
/// On a segment with target speed `v*` the leader applies `u = (a/b) v*`,
/// which is its steady-state command for that speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderProfile {
    /// `(start time s, target speed m/s)`, sorted by start time.
    pub segments: Vec<(f64, f64)>,
}

impl LeaderProfile {
    pub fn cruise(speed: f64) -> Self {
        Self { segments: vec![(0.0, speed)] }
    }

    pub fn target_speed(&self, t: f64) -> f64 {
        match self.segments.partition_point(|&(s, _)| s <= t) {
            0 => self.segments.first().map_or(0.0, |s| s.1),
            k => self.segments[k - 1].1,
        }
    }

    pub fn command(&self, t: f64, params: &VehicleParams) -> f64 {
        params.a / params.b * self.target_speed(t)
    }
}

impl Default for LeaderProfile {
    fn default() -> Self {
        Self::cruise(10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn follower_derivative_examples() {
        let p = VehicleParams::default();
        let (dx, dv) = follower_derivative(VehicleState::new(0.0, 10.0), 0.0, 0.0, &p);
        assert_eq!(dx, 10.0);
        assert_relative_eq!(dv, -1.413, epsilon = 1e-12);
        assert_eq!(follower_derivative(VehicleState::default(), 0.0, 0.0, &p), (0.0, 0.0));
        let (_, dv) = follower_derivative(VehicleState::default(), 1.0, 0.01, &p);
        assert_relative_eq!(dv, 6.697, epsilon = 1e-12);
    }

    #[test]
    fn follower_derivative_is_affine_in_input_and_disturbance() {
        let p = VehicleParams::default();
        let s = VehicleState::new(3.0, 7.5);
        let h = 1e-3;
        for (u, d) in [(0.0, 0.0), (1.3, -0.01), (-2.0, 0.5)] {
            let base = follower_derivative(s, u, d, &p).1;
            let du = (follower_derivative(s, u + h, d, &p).1 - base) / h;
            let dd = (follower_derivative(s, u, d + h, &p).1 - base) / h;
            assert_relative_eq!(du, p.b, epsilon = 1e-9);
            assert_relative_eq!(dd, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn step_attack_examples() {
        let atk = AttackSignal::step(30.0, 0.5);
        assert_eq!(apply_attack(2.0, &atk, 10.0), 2.0);
        assert_eq!(apply_attack(2.0, &atk, 40.0), 2.5);
        assert_eq!(apply_attack(2.0, &atk, 30.0), 2.5);
        assert_eq!(apply_attack(2.0, &AttackSignal::step(30.0, 0.0), 40.0), 2.0);
        assert_eq!(atk.onset(), Some(30.0));
        for t in [0.0, 29.999, 1e9] {
            assert_eq!(apply_attack(-1.25, &AttackSignal::none(), t), -1.25);
        }
    }

    #[test]
    fn sample_attack_is_piecewise_constant() {
        let atk =
            AttackSignal { kind: AttackKind::Samples { times: vec![1.0, 2.0], values: vec![0.2, -0.3] }, bound: 0.3 };
        atk.validate().unwrap();
        assert_eq!(atk.value(0.5), 0.0);
        assert_eq!(atk.value(1.5), 0.2);
        assert_eq!(atk.value(5.0), -0.3);
        let bad = AttackSignal { bound: 0.1, ..atk };
        assert!(matches!(bad.validate(), Err(PlantError::AttackOutOfBounds { .. })));
    }

    #[test]
    fn leader_output_examples() {
        let s = VehicleState::new(0.0, 10.0);
        assert_eq!(leader_output(s, 0.0), 10.0);
        assert_relative_eq!(leader_output(s, 0.025), 10.025, epsilon = 1e-12);
        assert_eq!(leader_output(VehicleState::default(), -0.025), -0.025);
    }

    #[test]
    fn signal_examples() {
        let mut zero = BoundedSignal::zero().generator();
        assert_eq!(zero.sample(3.0), 0.0);

        let mut sine = BoundedSignal::sinusoid(0.01).generator();
        assert_eq!(sine.sample(std::f64::consts::FRAC_PI_2), 0.01);

        let sig = BoundedSignal::uniform(-0.025, 0.025, 7);
        sig.validate().unwrap();
        let mut g = sig.generator();
        let mut t = 0.0;
        for _ in 0..1_000_000 {
            let s = g.sample(t);
            assert!((-0.025..=0.025).contains(&s));
            t += 1e-3;
        }
    }

    #[test]
    fn uniform_signal_is_deterministic_per_seed() {
        let sig = BoundedSignal::uniform(-1.0, 1.0, 42);
        let a: Vec<f64> = {
            let mut g = sig.generator();
            (0..100).map(|k| g.sample(k as f64)).collect()
        };
        let b: Vec<f64> = {
            let mut g = sig.generator();
            (0..100).map(|k| g.sample(k as f64)).collect()
        };
        assert_eq!(a, b);
        let c: Vec<f64> = {
            let mut g = BoundedSignal::uniform(-1.0, 1.0, 43).generator();
            (0..100).map(|k| g.sample(k as f64)).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn signal_validation_catches_escaping_generators() {
        let mut s = BoundedSignal::sinusoid(0.01);
        s.upper = 0.005;
        assert!(s.validate().is_err());
        let c = BoundedSignal { lower: 0.0, upper: 1.0, kind: SignalKind::Constant { value: 2.0 } };
        assert!(c.validate().is_err());
        assert!(BoundedSignal::uniform(1.0, 0.0, 1).validate().is_err());
    }

    #[test]
    fn plant_matrices_structure() {
        let pm = build_plant_matrices(&VehicleParams::default());
        assert_eq!(pm.a, Matrix::from_rows(&[[0.0, 1.0], [0.0, -0.1413]]).unwrap());
        assert_eq!(pm.b, Matrix::column(&[0.0, 6.6870]));
        assert_eq!(pm.c, Matrix::row(&[0.0, 1.0]));
        assert_eq!(pm.w, Matrix::column(&[0.0, 1.0]));
        assert_eq!(pm.v, Matrix::column(&[1.0]));
    }

    #[test]
    fn leader_profile_command_holds_target_speed() {
        let p = VehicleParams::default();
        let prof = LeaderProfile { segments: vec![(0.0, 10.0), (20.0, 15.0)] };
        assert_relative_eq!(prof.command(5.0, &p), 0.1413 / 6.6870 * 10.0);
        assert_eq!(prof.target_speed(25.0), 15.0);
        let (_, dv) = leader_derivative(VehicleState::new(0.0, 10.0), prof.command(1.0, &p), 0.0, &p);
        assert!(dv.abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(VehicleParams::new(0.0, 1.0, 1.0).is_err());
        assert!(VehicleParams::new(0.1, -1.0, 1.0).is_err());
        assert!(VehicleParams::new(0.1, 1.0, -1.0).is_err());
    }
}
