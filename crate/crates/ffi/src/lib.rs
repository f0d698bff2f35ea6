//! C ABI over the simulator.
//!
//! Handles are opaque and owned by the caller once created; release them with
//! the matching `*_free`. Every fallible call returns a [`CaccStatus`] and
//! stores a message retrievable with [`cacc_last_error`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use resilient_cacc::error::{exit, Error};
use resilient_cacc::plant::build_plant_matrices;
use resilient_cacc::sim::runner::{synthesis_problem, Simulation};
use resilient_cacc::sim::{emit_trace, ConfigError, RunMetrics, ScenarioConfig, SimError, TraceRow};
use resilient_cacc::synthesis::{
    read_gains, synthesize, tabulated_gains, DerivedObserverMatrices, GainSet, ObserverGains,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownScenario = 3,
    MalformedConfig = 4,
    MissingFile = 5,
    Simulation = 6,
    Synthesis = 7,
    Io = 8,
    /// The simulation already emitted its final row.
    Finished = 9,
    Panic = 10,
}

/// One trace row; field meanings follow the trace CSV columns.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CaccRow {
    pub t: f64,
    pub leader_x: f64,
    pub leader_v: f64,
    pub follower_x: f64,
    pub follower_v: f64,
    pub y: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub x_hat: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub gap: f64,
    pub e: f64,
    pub r: f64,
    pub u_leader: f64,
    pub u_bar: f64,
    pub u_follower: f64,
    pub f: f64,
    pub f_hat: f64,
    pub f_tilde: f64,
    pub eps_pos: f64,
    pub contained: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CaccMetrics {
    pub position_rmse: f64,
    pub distance_rmse: f64,
    pub min_gap: f64,
    pub containment_rate: f64,
    /// NaN when there is no attack or the estimate never settles.
    pub settling_time: f64,
    pub collision: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CaccWeightNorms {
    pub w: f64,
    pub v: f64,
    pub max_w: f64,
    pub max_v: f64,
    pub clamp_events: u64,
}

/// Per-run overrides; start from [`cacc_run_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CaccRunOptions {
    /// 0 keeps the scenario's seed.
    pub seed: u64,
    /// Non-positive keeps the scenario's step.
    pub dt: f64,
    /// Non-positive keeps the scenario's horizon.
    pub t_end: f64,
    pub baseline: u8,
}

/// Opaque simulation handle.
pub struct CaccSimulation {
    sim: Simulation,
    trace: Vec<TraceRow>,
    done: bool,
}

/// Opaque observer gain set.
pub struct CaccGains {
    gains: ObserverGains,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> CaccStatus {
    match err.exit_code() {
        exit::UNKNOWN_SCENARIO => CaccStatus::UnknownScenario,
        exit::MALFORMED_CONFIG => CaccStatus::MalformedConfig,
        exit::MISSING_FILE => CaccStatus::MissingFile,
        exit::SIMULATION => CaccStatus::Simulation,
        exit::SYNTHESIS => CaccStatus::Synthesis,
        exit::IO => CaccStatus::Io,
        _ => CaccStatus::InvalidArgument,
    }
}

fn fail(err: impl Into<Error>) -> CaccStatus {
    let err = err.into();
    set_error(err.to_string());
    status_of(&err)
}

/// Runs `body`, turning panics into [`CaccStatus::Panic`].
fn guard(body: impl FnOnce() -> CaccStatus) -> CaccStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            CaccStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, CaccStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(CaccStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        CaccStatus::InvalidArgument
    })
}

fn row_to_c(r: &TraceRow) -> CaccRow {
    CaccRow {
        t: r.t,
        leader_x: r.leader_x,
        leader_v: r.leader_v,
        follower_x: r.follower_x,
        follower_v: r.follower_v,
        y: r.y,
        x_lo: r.x_lo,
        x_hi: r.x_hi,
        x_hat: r.x_hat,
        v_lo: r.v_lo,
        v_hi: r.v_hi,
        gap: r.gap,
        e: r.e,
        r: r.r,
        u_leader: r.u_leader,
        u_bar: r.u_bar,
        u_follower: r.u_follower,
        f: r.f,
        f_hat: r.f_hat,
        f_tilde: r.f_tilde,
        eps_pos: r.eps_pos,
        contained: r.contained as u8,
    }
}

fn apply_options(mut config: ScenarioConfig, opts: Option<&CaccRunOptions>) -> ScenarioConfig {
    if let Some(o) = opts {
        if o.seed != 0 {
            config = config.with_seed(o.seed);
        }
        if o.dt > 0.0 {
            config.dt = o.dt;
        }
        if o.t_end > 0.0 {
            config.t_end = o.t_end;
        }
        config.baseline |= o.baseline != 0;
    }
    config
}

fn build(config: ScenarioConfig, gains: Option<&ObserverGains>, out: *mut *mut CaccSimulation) -> CaccStatus {
    let sim = match gains {
        None => Simulation::new(config),
        Some(g) => {
            let plant = build_plant_matrices(&config.leader);
            match DerivedObserverMatrices::from_gains(g, &plant) {
                Ok(d) => Simulation::with_gains(config, g.clone(), d),
                Err(e) => Err(SimError::Gains(e)),
            }
        }
    };
    match sim {
        Ok(sim) => {
            let handle = Box::new(CaccSimulation { sim, trace: Vec::new(), done: false });
            unsafe { *out = Box::into_raw(handle) };
            CaccStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Defaults that keep every scenario setting.
#[no_mangle]
pub extern "C" fn cacc_run_options_default() -> CaccRunOptions {
    CaccRunOptions { seed: 0, dt: 0.0, t_end: 0.0, baseline: 0 }
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn cacc_status_str(status: CaccStatus) -> *const c_char {
    let s: &'static CStr = match status {
        CaccStatus::Ok => c"ok",
        CaccStatus::NullPointer => c"null pointer argument",
        CaccStatus::InvalidArgument => c"invalid argument",
        CaccStatus::UnknownScenario => c"unknown scenario",
        CaccStatus::MalformedConfig => c"malformed config or gain file",
        CaccStatus::MissingFile => c"missing file",
        CaccStatus::Simulation => c"simulation aborted",
        CaccStatus::Synthesis => c"gain synthesis failed",
        CaccStatus::Io => c"i/o error",
        CaccStatus::Finished => c"simulation finished",
        CaccStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cacc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a simulation of a built-in scenario. `options` may be null.
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `options` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_new(
    scenario: *const c_char,
    options: *const CaccRunOptions,
    out: *mut *mut CaccSimulation,
) -> CaccStatus {
    guard(|| {
        if out.is_null() {
            return CaccStatus::NullPointer;
        }
        let name = match read_str(scenario) {
            Ok(n) => n,
            Err(s) => return s,
        };
        match ScenarioConfig::named(name) {
            Ok(c) => build(apply_options(c, options.as_ref()), None, out),
            Err(e) => fail(e),
        }
    })
}

/// Creates a simulation from a scenario config file. `options` may be null.
///
/// # Safety
/// As [`cacc_simulation_new`], with `path` a NUL-terminated file path.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_from_config(
    path: *const c_char,
    options: *const CaccRunOptions,
    out: *mut *mut CaccSimulation,
) -> CaccStatus {
    guard(|| {
        if out.is_null() {
            return CaccStatus::NullPointer;
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match ScenarioConfig::load(Path::new(path)) {
            Ok(c) => build(apply_options(c, options.as_ref()), None, out),
            Err(e) => fail(e),
        }
    })
}

/// Creates a built-in scenario simulation that uses `gains` for its observer.
///
/// # Safety
/// As [`cacc_simulation_new`]; `gains` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_with_gains(
    scenario: *const c_char,
    options: *const CaccRunOptions,
    gains: *const CaccGains,
    out: *mut *mut CaccSimulation,
) -> CaccStatus {
    guard(|| {
        if out.is_null() || gains.is_null() {
            return CaccStatus::NullPointer;
        }
        let name = match read_str(scenario) {
            Ok(n) => n,
            Err(s) => return s,
        };
        match ScenarioConfig::named(name) {
            Ok(c) => build(apply_options(c, options.as_ref()), Some(&(*gains).gains), out),
            Err(e) => fail(e),
        }
    })
}

/// Emits the row at the current time into `row` (may be null) and advances.
/// The row at the horizon is emitted last; later calls return `Finished`.
///
/// # Safety
/// `sim` must be a live handle; `row` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_step(sim: *mut CaccSimulation, row: *mut CaccRow) -> CaccStatus {
    guard(|| {
        let Some(h) = sim.as_mut() else { return CaccStatus::NullPointer };
        if h.done {
            return CaccStatus::Finished;
        }
        let r = match h.sim.current_row() {
            Ok(r) => r,
            Err(e) => {
                h.done = true;
                return fail(e);
            }
        };
        if let Some(out) = row.as_mut() {
            *out = row_to_c(&r);
        }
        h.trace.push(r);
        if h.sim.is_finished() {
            h.done = true;
        } else if let Err(e) = h.sim.advance() {
            h.done = true;
            return fail(e);
        }
        CaccStatus::Ok
    })
}

/// Steps until the horizon (or the first error).
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_run(sim: *mut CaccSimulation) -> CaccStatus {
    loop {
        match cacc_simulation_step(sim, ptr::null_mut()) {
            CaccStatus::Ok => continue,
            CaccStatus::Finished => return CaccStatus::Ok,
            other => return other,
        }
    }
}

/// Simulation time of the next row to be emitted.
///
/// # Safety
/// `sim` must be null or a live handle. Returns NaN for null.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_time(sim: *const CaccSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |h| h.sim.time())
}

/// Number of rows emitted so far.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_row_count(sim: *const CaccSimulation) -> usize {
    sim.as_ref().map_or(0, |h| h.trace.len())
}

/// Copies emitted row `index`.
///
/// # Safety
/// `sim` must be a live handle; `row` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_row(
    sim: *const CaccSimulation,
    index: usize,
    row: *mut CaccRow,
) -> CaccStatus {
    let (Some(h), Some(out)) = (sim.as_ref(), row.as_mut()) else { return CaccStatus::NullPointer };
    match h.trace.get(index) {
        Some(r) => {
            *out = row_to_c(r);
            CaccStatus::Ok
        }
        None => {
            set_error(format!("row {index} out of range ({} emitted)", h.trace.len()));
            CaccStatus::InvalidArgument
        }
    }
}

/// Metrics over the rows emitted so far.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_metrics(sim: *const CaccSimulation, out: *mut CaccMetrics) -> CaccStatus {
    guard(|| {
        let (Some(h), Some(out)) = (sim.as_ref(), out.as_mut()) else { return CaccStatus::NullPointer };
        match RunMetrics::from_trace(&h.trace, h.sim.config().controller.desired_gap) {
            Ok(m) => {
                *out = CaccMetrics {
                    position_rmse: m.position_rmse,
                    distance_rmse: m.distance_rmse,
                    min_gap: m.min_gap,
                    containment_rate: m.containment_rate,
                    settling_time: m.settling_time.unwrap_or(f64::NAN),
                    collision: m.collision as u8,
                };
                CaccStatus::Ok
            }
            Err(e) => fail(SimError::from(e)),
        }
    })
}

/// Current estimator weight norms and their running maxima.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_weight_norms(
    sim: *const CaccSimulation,
    out: *mut CaccWeightNorms,
) -> CaccStatus {
    let (Some(h), Some(out)) = (sim.as_ref(), out.as_mut()) else { return CaccStatus::NullPointer };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let stats = h.sim.weight_stats();
    *out = CaccWeightNorms {
        w: norm(h.sim.w()),
        v: norm(h.sim.v()),
        max_w: stats.max_w_norm,
        max_v: stats.max_v_norm,
        clamp_events: stats.clamp_events as u64,
    };
    CaccStatus::Ok
}

/// Writes the rows emitted so far as a trace CSV.
///
/// # Safety
/// `sim` must be a live handle; `path` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_write_trace(sim: *const CaccSimulation, path: *const c_char) -> CaccStatus {
    guard(|| {
        let Some(h) = sim.as_ref() else { return CaccStatus::NullPointer };
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match emit_trace(&h.trace, Path::new(path)) {
            Ok(()) => CaccStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cacc_simulation_free(sim: *mut CaccSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Tabulated gains: `set` is "noise-free" or "noisy".
///
/// # Safety
/// `set` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_gains_tabulated(set: *const c_char, out: *mut *mut CaccGains) -> CaccStatus {
    guard(|| {
        if out.is_null() {
            return CaccStatus::NullPointer;
        }
        let which = match read_str(set) {
            Ok("noise-free") => GainSet::NoiseFree,
            Ok("noisy") => GainSet::Noisy,
            Ok(other) => return fail(ConfigError::UnknownScenario(other.to_string())),
            Err(s) => return s,
        };
        *out = Box::into_raw(Box::new(CaccGains { gains: tabulated_gains(which) }));
        CaccStatus::Ok
    })
}

/// Gains from the synthesis LP for a built-in scenario's bounds.
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_gains_synthesize(scenario: *const c_char, out: *mut *mut CaccGains) -> CaccStatus {
    guard(|| {
        if out.is_null() {
            return CaccStatus::NullPointer;
        }
        let name = match read_str(scenario) {
            Ok(n) => n,
            Err(s) => return s,
        };
        let config = match ScenarioConfig::named(name) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match synthesize(&synthesis_problem(&config)) {
            Ok((gains, _, _)) => {
                *out = Box::into_raw(Box::new(CaccGains { gains }));
                CaccStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Gains read from a gain file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cacc_gains_load(path: *const c_char, out: *mut *mut CaccGains) -> CaccStatus {
    guard(|| {
        if out.is_null() {
            return CaccStatus::NullPointer;
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match read_gains(Path::new(path)) {
            Ok(gains) => {
                *out = Box::into_raw(Box::new(CaccGains { gains }));
                CaccStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Copies the two-state gain matrices: `l` and `n` take 2 entries, `t` takes
/// 4 in row-major order.
///
/// # Safety
/// `gains` must be a live handle; the output arrays writable at those sizes.
#[no_mangle]
pub unsafe extern "C" fn cacc_gains_get(gains: *const CaccGains, l: *mut f64, t: *mut f64, n: *mut f64) -> CaccStatus {
    let Some(g) = gains.as_ref() else { return CaccStatus::NullPointer };
    if l.is_null() || t.is_null() || n.is_null() {
        return CaccStatus::NullPointer;
    }
    let g = &g.gains;
    if g.t.shape() != (2, 2) || g.l.shape() != (2, 1) || g.n.shape() != (2, 1) {
        set_error(format!("gain set is not two-state (T is {:?})", g.t.shape()));
        return CaccStatus::InvalidArgument;
    }
    for i in 0..2 {
        *l.add(i) = g.l[(i, 0)];
        *n.add(i) = g.n[(i, 0)];
        for j in 0..2 {
            *t.add(2 * i + j) = g.t[(i, j)];
        }
    }
    CaccStatus::Ok
}

/// # Safety
/// `gains` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cacc_gains_free(gains: *mut CaccGains) {
    if !gains.is_null() {
        drop(Box::from_raw(gains));
    }
}
