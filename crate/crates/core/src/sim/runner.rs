//! Fixed-step closed-loop simulation.
//!
//! Everything lives in one flat state vector integrated with classical RK4:
//! leader and follower `(x, v)`, the lower and upper framers, then the outer
//! and inner estimator weights. Measurement, received command, disturbances
//! and noise are sampled at the start of each step and held across its
//! stages.

use crate::controller::{baseline_control_law, compute_errors, control_law, LawInputs, TrackingErrors};
use crate::estimator::{
    clamp_to_ball, estimate_attack, frobenius, weight_derivative_into, EstimatorError, EstimatorInput, EstimatorState,
};
use crate::interval_algebra::IntervalVector;
use crate::observer::{input_interval, Bounds, ObserverError, ObserverModel, Vec2};
use crate::plant::{build_plant_matrices, follower_derivative, leader_derivative, SignalGenerator, VehicleState};
use crate::synthesis::{
    load_tabulated_gains, read_gains, synthesize, DerivedObserverMatrices, ObserverGains, SynthesisError,
    SynthesisProblem,
};

use super::config::{ConfigError, GainSource, ScenarioConfig, VelocitySource};
use super::metrics::{MetricsError, RunMetrics};
use super::trace::TraceRow;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("observer gains: {0}")]
    Gains(#[from] SynthesisError),
    #[error("observer setup: {0}")]
    Observer(#[from] ObserverError),
    #[error("estimator setup: {0}")]
    Estimator(#[from] EstimatorError),
    #[error("at t = {t}: {source}")]
    FramerViolation { t: f64, source: ObserverError },
    #[error("at t = {t}: non-finite {what}")]
    NonFinite { t: f64, what: &'static str },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A failed run together with every row produced before the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: SimError,
    pub trace: Vec<TraceRow>,
}

const XL: usize = 0;
const VL: usize = 1;
const XF: usize = 2;
const VF: usize = 3;
const Z_LO: usize = 4;
const Z_HI: usize = 6;
const W0: usize = 8;

/// Relative slack of the trace containment flag. Without any uncertainty the
/// framers collapse onto the true state and exact comparison would only
/// measure rounding.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

const STATE_NAMES: [&str; 8] = [
    "leader position",
    "leader velocity",
    "follower position",
    "follower velocity",
    "framer",
    "framer",
    "framer",
    "framer",
];

/// Scratch space for [`rk4_step`].
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(n: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![0.0; n]), stage: vec![0.0; n] }
    }
}

/// One classical RK4 step of `ẋ = f(t, x)` in place.
pub fn rk4_step<F>(mut f: F, t: f64, dt: f64, x: &mut [f64], ws: &mut Rk4Workspace)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = x.len();
    let [k1, k2, k3, k4] = &mut ws.k;
    let stage = &mut ws.stage;
    f(t, x, k1);
    for i in 0..n {
        stage[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, stage, k2);
    for i in 0..n {
        stage[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, stage, k3);
    for i in 0..n {
        stage[i] = x[i] + dt * k3[i];
    }
    f(t + dt, stage, k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Exogenous values held over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeldInputs {
    pub t: f64,
    pub y: f64,
    pub noise: f64,
    pub u_leader: f64,
    pub attack: f64,
    pub u_bar: f64,
    pub d_leader: f64,
    pub d_follower: f64,
}

/// Signals computed alongside the derivative at one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSignals {
    pub x_lower: Vec2,
    pub x_upper: Vec2,
    pub x_hat: f64,
    pub v_hat: f64,
    pub errors: TrackingErrors,
    pub f_hat: f64,
    pub u_follower: f64,
}

/// The constant part of the closed loop.
#[derive(Debug, Clone)]
struct Dynamics {
    config: ScenarioConfig,
    model: ObserverModel,
    neurons: usize,
}

impl Dynamics {
    fn eval(&self, s: &[f64], held: &HeldInputs, out: &mut [f64]) -> StageSignals {
        let c = &self.config;
        let n = self.neurons;
        let leader = VehicleState::new(s[XL], s[VL]);
        let follower = VehicleState::new(s[XF], s[VF]);
        let z_lo = [s[Z_LO], s[Z_LO + 1]];
        let z_hi = [s[Z_HI], s[Z_HI + 1]];
        let (x_lower, x_upper) = self.model.recover_raw(&z_lo, &z_hi, held.y);
        let x_hat = 0.5 * (x_lower[0] + x_upper[0]);
        let v_hat = match c.observer.velocity_source {
            VelocitySource::Measurement => held.y,
            VelocitySource::FramerMidpoint => 0.5 * (x_lower[1] + x_upper[1]),
        };
        let errors = compute_errors(follower, x_hat, v_hat, &c.controller, c.leader.length);
        let input = EstimatorInput::from_error(c.follower.b, errors.r);
        let (w, v) = s[W0..].split_at(n);
        let f_hat = if c.baseline { 0.0 } else { estimate_attack(w, v, input) };
        let law_inputs = LawInputs { follower_v: follower.v, leader_v_est: v_hat, u_received: held.u_bar, f_hat };
        let law = if c.baseline { baseline_control_law } else { control_law };
        let u_follower = law(errors, law_inputs, &c.controller, &c.follower, &c.leader);

        (out[XL], out[VL]) = leader_derivative(leader, held.u_leader, held.d_leader, &c.leader);
        (out[XF], out[VF]) = follower_derivative(follower, u_follower, held.d_follower, &c.follower);
        let u_iv = input_interval(held.u_bar, f_hat, c.attack.bound);
        let (dl, du) = self.model.framer_derivative(&z_lo, &z_hi, held.y, u_iv);
        out[Z_LO..Z_LO + 2].copy_from_slice(&dl);
        out[Z_HI..Z_HI + 2].copy_from_slice(&du);
        let (dw, dv) = out[W0..].split_at_mut(n);
        if c.baseline {
            dw.fill(0.0);
            dv.fill(0.0);
        } else {
            weight_derivative_into(w, v, input, &c.estimator, dw, dv);
        }
        StageSignals { x_lower, x_upper, x_hat, v_hat, errors, f_hat, u_follower }
    }
}

/// Running extremes of the estimator weight norms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightStats {
    /// Largest `‖Ŵ‖` seen after any integration step, before the radial safeguard.
    pub max_w_norm: f64,
    pub max_v_norm: f64,
    /// Steps on which the safeguard had to pull a weight back onto its ball.
    pub clamp_events: usize,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    dyn_: Dynamics,
    gains: ObserverGains,
    derived: DerivedObserverMatrices,
    state: Vec<f64>,
    deriv: Vec<f64>,
    ws: Rk4Workspace,
    noise: SignalGenerator,
    dist_leader: SignalGenerator,
    dist_follower: SignalGenerator,
    held: HeldInputs,
    step: usize,
    steps: usize,
    stats: WeightStats,
}

/// Builds the synthesis problem matching a scenario's bounds.
pub fn synthesis_problem(config: &ScenarioConfig) -> SynthesisProblem {
    SynthesisProblem::new(build_plant_matrices(&config.leader), config.disturbance.width(), config.noise.width())
        .with_input_width(2.0 * config.attack.bound)
}

pub fn resolve_gains(config: &ScenarioConfig) -> Result<(ObserverGains, DerivedObserverMatrices), SynthesisError> {
    match &config.observer.gains {
        GainSource::Tabulated => load_tabulated_gains(config.observer.gain_set, &config.leader),
        GainSource::Synthesize => synthesize(&synthesis_problem(config)).map(|(g, d, _)| (g, d)),
        GainSource::File(path) => {
            let gains = read_gains(path)?;
            let derived = DerivedObserverMatrices::from_gains(&gains, &build_plant_matrices(&config.leader))?;
            Ok((gains, derived))
        }
    }
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let (gains, derived) = resolve_gains(&config)?;
        Self::with_gains(config, gains, derived)
    }

    pub fn with_gains(
        config: ScenarioConfig,
        gains: ObserverGains,
        derived: DerivedObserverMatrices,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let model = ObserverModel::new(
            &derived,
            Bounds::new(config.disturbance.lower, config.disturbance.upper),
            Bounds::new(config.noise.lower, config.noise.upper),
        )?;
        let est = EstimatorState::new(config.estimator.clone(), config.estimator_seed())?;
        let neurons = est.neurons();
        let dim = W0 + 3 * neurons;
        let mut state = vec![0.0; dim];
        let init = &config.initial;
        state[XL] = init.leader.x;
        state[VL] = init.leader.v;
        state[XF] = init.follower.x;
        state[VF] = init.follower.v;
        state[W0..W0 + neurons].copy_from_slice(&est.w);
        state[W0 + neurons..].copy_from_slice(&est.v);

        let mut sim = Self {
            noise: config.noise.generator(),
            dist_leader: config.disturbance.generator(),
            dist_follower: config.follower_disturbance.generator(),
            steps: config.steps(),
            dyn_: Dynamics { config, model, neurons },
            gains,
            derived,
            state,
            deriv: vec![0.0; dim],
            ws: Rk4Workspace::new(dim),
            held: HeldInputs::default(),
            step: 0,
            stats: WeightStats::default(),
        };
        sim.sample_inputs();
        let init = &sim.dyn_.config.initial;
        let center = [init.leader.x + init.framer_offset[0], init.leader.v + init.framer_offset[1]];
        let x0 = IntervalVector::around(&center, &init.framer_radius).map_err(ObserverError::from)?;
        let fs = sim.dyn_.model.init_framers(&x0, sim.held.y)?;
        sim.state[Z_LO..Z_LO + 2].copy_from_slice(&fs.z_lower);
        sim.state[Z_HI..Z_HI + 2].copy_from_slice(&fs.z_upper);
        sim.stats.max_w_norm = frobenius(sim.w());
        sim.stats.max_v_norm = frobenius(sim.v());
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.dyn_.config
    }

    pub fn gains(&self) -> &ObserverGains {
        &self.gains
    }

    pub fn derived(&self) -> &DerivedObserverMatrices {
        &self.derived
    }

    pub fn model(&self) -> &ObserverModel {
        &self.dyn_.model
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dyn_.config.dt
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.steps
    }

    pub fn leader(&self) -> VehicleState {
        VehicleState::new(self.state[XL], self.state[VL])
    }

    pub fn follower(&self) -> VehicleState {
        VehicleState::new(self.state[XF], self.state[VF])
    }

    pub fn framers(&self) -> (Vec2, Vec2) {
        ([self.state[Z_LO], self.state[Z_LO + 1]], [self.state[Z_HI], self.state[Z_HI + 1]])
    }

    pub fn w(&self) -> &[f64] {
        &self.state[W0..W0 + self.dyn_.neurons]
    }

    pub fn v(&self) -> &[f64] {
        &self.state[W0 + self.dyn_.neurons..]
    }

    pub fn weight_stats(&self) -> WeightStats {
        self.stats
    }

    pub fn held(&self) -> HeldInputs {
        self.held
    }

    fn sample_inputs(&mut self) {
        let c = &self.dyn_.config;
        let t = self.step as f64 * c.dt;
        let noise = self.noise.sample(t);
        let d_leader = self.dist_leader.sample(t);
        let d_follower = self.dist_follower.sample(t);
        let u_leader = c.leader_profile.command(t, &c.leader);
        let attack = c.attack.value(t);
        self.held = HeldInputs {
            t,
            y: self.state[VL] + noise,
            noise,
            u_leader,
            attack,
            u_bar: u_leader + attack,
            d_leader,
            d_follower,
        };
    }

    /// Trace row for the current time. Fails if the framers have crossed.
    pub fn current_row(&mut self) -> Result<TraceRow, SimError> {
        let held = self.held;
        let sig = self.dyn_.eval(&self.state, &held, &mut self.deriv);
        let row = self.row_from(&held, &sig);
        let (z_lo, z_hi) = self.framers();
        self.dyn_
            .model
            .recover_bounds(&z_lo, &z_hi, held.y)
            .map_err(|source| SimError::FramerViolation { t: held.t, source })?;
        Ok(row)
    }

    fn row_from(&self, held: &HeldInputs, sig: &StageSignals) -> TraceRow {
        let c = &self.dyn_.config;
        let (leader, follower) = (self.leader(), self.follower());
        let contained = (0..2).all(|i| {
            let truth = [leader.x, leader.v][i];
            let slack = CONTAINMENT_SLACK * truth.abs().max(1.0);
            sig.x_lower[i] - slack <= truth && truth <= sig.x_upper[i] + slack
        });
        TraceRow {
            t: held.t,
            leader_x: leader.x,
            leader_v: leader.v,
            follower_x: follower.x,
            follower_v: follower.v,
            y: held.y,
            x_lo: sig.x_lower[0],
            x_hi: sig.x_upper[0],
            x_hat: sig.x_hat,
            v_lo: sig.x_lower[1],
            v_hi: sig.x_upper[1],
            gap: leader.x - follower.x - c.leader.length,
            e: sig.errors.e,
            r: sig.errors.r,
            u_leader: held.u_leader,
            u_bar: held.u_bar,
            u_follower: sig.u_follower,
            f: held.attack,
            f_hat: sig.f_hat,
            f_tilde: held.attack - sig.f_hat,
            eps_pos: sig.x_upper[0] - sig.x_lower[0],
            contained,
        }
    }

    /// Advances one step with the inputs held at their current values.
    pub fn advance(&mut self) -> Result<(), SimError> {
        let held = self.held;
        let dt = self.dyn_.config.dt;
        let dyn_ = &self.dyn_;
        rk4_step(
            |_, s, out| {
                dyn_.eval(s, &held, out);
            },
            held.t,
            dt,
            &mut self.state,
            &mut self.ws,
        );
        self.step += 1;
        let t = self.time();
        if let Some(i) = self.state.iter().position(|x| !x.is_finite()) {
            let what = STATE_NAMES.get(i).copied().unwrap_or("estimator weight");
            return Err(SimError::NonFinite { t, what });
        }
        let n = self.dyn_.neurons;
        let (w_max, v_max) = (self.dyn_.config.estimator.w_max, self.dyn_.config.estimator.v_max);
        let (w, v) = self.state[W0..].split_at_mut(n);
        let (wn, vn) = (frobenius(w), frobenius(v));
        self.stats.max_w_norm = self.stats.max_w_norm.max(wn);
        self.stats.max_v_norm = self.stats.max_v_norm.max(vn);
        if wn > w_max || vn > v_max {
            self.stats.clamp_events += 1;
            clamp_to_ball(w, w_max);
            clamp_to_ball(v, v_max);
        }
        self.sample_inputs();
        Ok(())
    }

    /// Emits the row at the current time, then advances. The final row at
    /// `t_end` comes from [`Simulation::current_row`] once finished.
    pub fn step(&mut self) -> Result<TraceRow, SimError> {
        let row = self.current_row()?;
        self.advance()?;
        Ok(row)
    }

    pub fn run(mut self) -> Result<RunOutput, RunFailure> {
        let mut trace = Vec::with_capacity(self.steps + 1);
        let fail = |error, trace| RunFailure { error, trace };
        loop {
            let held = self.held;
            let row = match self.current_row() {
                Ok(row) => row,
                Err(e) => {
                    let sig = self.dyn_.eval(&self.state, &held, &mut self.deriv);
                    trace.push(self.row_from(&held, &sig));
                    return Err(fail(e, trace));
                }
            };
            trace.push(row);
            if self.is_finished() {
                break;
            }
            if let Err(e) = self.advance() {
                return Err(fail(e, trace));
            }
        }
        let metrics = match RunMetrics::from_trace(&trace, self.dyn_.config.controller.desired_gap) {
            Ok(m) => m,
            Err(e) => return Err(fail(e.into(), trace)),
        };
        Ok(RunOutput { trace, metrics, weights: self.stats, gains: self.gains })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub metrics: RunMetrics,
    pub weights: WeightStats,
    pub gains: ObserverGains,
}

pub fn run_scenario(config: ScenarioConfig) -> Result<RunOutput, RunFailure> {
    let sim = Simulation::new(config).map_err(|error| RunFailure { error, trace: Vec::new() })?;
    sim.run()
}

/// Largest `‖(e, r)‖` over the trailing `fraction` of the trace.
pub fn tracking_norm_tail(rows: &[TraceRow], fraction: f64) -> f64 {
    let Some(last) = rows.last() else { return 0.0 };
    let start = last.t * (1.0 - fraction);
    rows.iter().filter(|r| r.t >= start).map(|r| r.e.hypot(r.r)).fold(0.0, f64::max)
}
