//! Scenario configuration and the built-in named scenarios.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerGains;
use crate::estimator::EstimatorSettings;
use crate::plant::{AttackSignal, BoundedSignal, LeaderProfile, SignalKind, VehicleParams, VehicleState};
use crate::synthesis::GainSet;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown scenario `{0}` (expected one of: noise-free, noisy, nominal, degenerate)")]
    UnknownScenario(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unrecognized gain source `{0}` (expected tabulated, synth or file:<path>)")]
    GainSource(String),
}

/// Where the observer gains come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainSource {
    /// Tabulated set selected by [`ObserverSettings::gain_set`].
    Tabulated,
    /// Solved from the L1 synthesis LP for this scenario's bounds.
    Synthesize,
    File(PathBuf),
}

impl FromStr for GainSource {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tabulated" => Ok(GainSource::Tabulated),
            "synth" | "synthesize" => Ok(GainSource::Synthesize),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(GainSource::File(PathBuf::from(p))),
                _ => Err(ConfigError::GainSource(s.to_string())),
            },
        }
    }
}

/// Leader velocity fed to the control law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocitySource {
    /// The raw radar measurement `y`.
    Measurement,
    /// Midpoint of the observer's velocity interval.
    FramerMidpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSettings {
    pub gains: GainSource,
    pub gain_set: GainSet,
    pub velocity_source: VelocitySource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    pub leader: VehicleState,
    pub follower: VehicleState,
    /// Half-widths of the initial leader-state interval (position, velocity).
    pub framer_radius: [f64; 2],
    /// Offset of the interval center from the true leader state.
    #[serde(default)]
    pub framer_offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    /// Run the uncompensated law (attack estimate forced to zero).
    #[serde(default)]
    pub baseline: bool,
    /// Bound on `‖(e, r)‖` over the last quarter of the run.
    pub tracking_bound: f64,
    pub leader: VehicleParams,
    pub follower: VehicleParams,
    pub leader_profile: LeaderProfile,
    pub initial: InitialConditions,
    pub attack: AttackSignal,
    /// Disturbance on the leader; its bounds feed the observer.
    pub disturbance: BoundedSignal,
    pub follower_disturbance: BoundedSignal,
    pub noise: BoundedSignal,
    pub controller: ControllerGains,
    pub estimator: EstimatorSettings,
    pub observer: ObserverSettings,
}

pub const SCENARIO_NAMES: [&str; 4] = ["noise-free", "noisy", "nominal", "degenerate"];

pub const DEFAULT_SEED: u64 = 1;
pub const ATTACK_TIME: f64 = 30.0;
pub const ATTACK_MAGNITUDE: f64 = 0.5;
pub const DISTURBANCE_AMPLITUDE: f64 = 0.01;
pub const NOISE_BOUND: f64 = 0.025;

impl ScenarioConfig {
    fn base(name: &str) -> Self {
        let length = VehicleParams::default().length;
        let gains = ControllerGains::default();
        let leader = VehicleState::new(25.0, 10.0);
        Self {
            name: name.to_string(),
            seed: DEFAULT_SEED,
            dt: 1e-3,
            t_end: 60.0,
            baseline: false,
            tracking_bound: 1.0,
            leader: VehicleParams::default(),
            follower: VehicleParams::default(),
            leader_profile: LeaderProfile::default(),
            initial: InitialConditions {
                leader,
                follower: VehicleState::new(leader.x - length - gains.desired_gap, leader.v),
                framer_radius: [0.5, 0.1],
                framer_offset: [0.0, 0.0],
            },
            attack: AttackSignal::step(ATTACK_TIME, ATTACK_MAGNITUDE),
            disturbance: BoundedSignal::sinusoid(DISTURBANCE_AMPLITUDE),
            follower_disturbance: BoundedSignal {
                kind: SignalKind::Sinusoid { amplitude: DISTURBANCE_AMPLITUDE, omega: 0.7, phase: 1.0, offset: 0.0 },
                ..BoundedSignal::sinusoid(DISTURBANCE_AMPLITUDE)
            },
            noise: BoundedSignal::zero(),
            controller: gains,
            estimator: EstimatorSettings::default(),
            observer: ObserverSettings {
                gains: GainSource::Tabulated,
                gain_set: GainSet::NoiseFree,
                velocity_source: VelocitySource::Measurement,
            },
        }
    }

    /// Built-in scenario by name.
    pub fn named(name: &str) -> Result<Self, ConfigError> {
        let mut c = Self::base(name);
        match name {
            "noise-free" => {}
            "noisy" => {
                c.noise = BoundedSignal::uniform(-NOISE_BOUND, NOISE_BOUND, 0);
                c.observer.gain_set = GainSet::Noisy;
                c.observer.velocity_source = VelocitySource::FramerMidpoint;
            }
            "nominal" => {
                c.attack = AttackSignal::none();
                c.disturbance = BoundedSignal::zero();
                c.follower_disturbance = BoundedSignal::zero();
            }
            "degenerate" => {
                c.attack = AttackSignal::none();
                c.disturbance = BoundedSignal::zero();
                c.follower_disturbance = BoundedSignal::zero();
                c.initial.framer_radius = [0.0, 0.0];
            }
            other => return Err(ConfigError::UnknownScenario(other.to_string())),
        }
        Ok(c.with_seed(DEFAULT_SEED))
    }

    /// Sets the run seed and reseeds every random channel from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        for (channel, signal) in
            [&mut self.noise, &mut self.disturbance, &mut self.follower_disturbance].into_iter().enumerate()
        {
            if let SignalKind::Uniform { seed: s } = &mut signal.kind {
                *s = derive_seed(seed, channel as u64);
            }
        }
        self
    }

    /// Seed for the estimator's inner-weight initialization.
    pub fn estimator_seed(&self) -> u64 {
        derive_seed(self.seed, 100)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return bad(format!("t_end {} must be at least dt {}", self.t_end, self.dt));
        }
        if !(self.tracking_bound > 0.0) {
            return bad("tracking_bound must be positive".into());
        }
        let wrap = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.leader.validate().map_err(|e| wrap(&e))?;
        self.follower.validate().map_err(|e| wrap(&e))?;
        self.attack.validate().map_err(|e| wrap(&e))?;
        for s in [&self.disturbance, &self.follower_disturbance, &self.noise] {
            s.validate().map_err(|e| wrap(&e))?;
        }
        self.controller.validate().map_err(|e| wrap(&e))?;
        self.estimator.validate().map_err(|e| wrap(&e))?;
        let init = &self.initial;
        if !(init.leader.is_finite() && init.follower.is_finite()) {
            return bad("initial states must be finite".into());
        }
        for i in 0..2 {
            let (r, o) = (init.framer_radius[i], init.framer_offset[i]);
            if !(r >= 0.0) {
                return bad(format!("framer_radius[{i}] must be nonnegative, got {r}"));
            }
            if !(o.abs() <= r) {
                return bad(format!(
                    "initial framer interval excludes the true leader state (offset {o} > radius {r})"
                ));
            }
        }
        if self.leader_profile.segments.is_empty() {
            return bad("leader_profile needs at least one segment".into());
        }
        self.controller.check_gain_condition();
        Ok(())
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

/// SplitMix64 finalizer over `(seed, channel)`.
fn derive_seed(seed: u64, channel: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(channel + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_scenarios_validate() {
        for name in SCENARIO_NAMES {
            let c = ScenarioConfig::named(name).unwrap();
            c.validate().unwrap();
            assert_eq!(c.name, name);
        }
        assert!(matches!(ScenarioConfig::named("bogus"), Err(ConfigError::UnknownScenario(_))));
    }

    #[test]
    fn defaults_start_at_the_desired_gap() {
        let c = ScenarioConfig::named("noise-free").unwrap();
        let gap = c.initial.leader.x - c.initial.follower.x - c.leader.length;
        assert_eq!(gap, c.controller.desired_gap);
        assert_eq!(c.steps(), 60_000);
    }

    #[test]
    fn toml_round_trip() {
        for name in SCENARIO_NAMES {
            let c = ScenarioConfig::named(name).unwrap();
            let text = c.to_toml();
            let back = ScenarioConfig::from_toml(&text, Path::new("mem.toml")).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn seed_reseeds_uniform_channels() {
        let a = ScenarioConfig::named("noisy").unwrap().with_seed(5);
        let b = ScenarioConfig::named("noisy").unwrap().with_seed(6);
        assert_ne!(a.noise, b.noise);
        assert_eq!(a.disturbance, b.disturbance);
        assert_ne!(a.estimator_seed(), b.estimator_seed());
    }

    #[test]
    fn gain_source_parsing() {
        assert_eq!("tabulated".parse::<GainSource>().unwrap(), GainSource::Tabulated);
        assert_eq!("synth".parse::<GainSource>().unwrap(), GainSource::Synthesize);
        assert_eq!("file:g.toml".parse::<GainSource>().unwrap(), GainSource::File("g.toml".into()));
        assert!("file:".parse::<GainSource>().is_err());
        assert!("lp".parse::<GainSource>().is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = ScenarioConfig::named("noisy").unwrap();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::named("noisy").unwrap();
        c.initial.framer_offset = [0.6, 0.0];
        assert!(c.validate().is_err());
        assert!(matches!(ScenarioConfig::from_toml("name = 3", Path::new("x.toml")), Err(ConfigError::Parse { .. })));
    }
}
