use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use resilient_cacc::error::{exit, Error};
use resilient_cacc::plant::build_plant_matrices;
use resilient_cacc::sim::plot::render_svg;
use resilient_cacc::sim::runner::{synthesis_problem, RunOutput};
use resilient_cacc::sim::{
    emit_trace, parse_trace_file, run_scenario, GainSource, RunMetrics, ScenarioConfig, SimError,
};
use resilient_cacc::synthesis::{
    check_gains, read_gains, synthesize, tabulated_gains, write_gains, GainSet, ObserverGains,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O error (unwritable output, unreadable input)
  2  invalid command-line usage
  3  unknown scenario name
  4  malformed config, gain file or trace
  5  missing input file
  6  simulation aborted (framer violation or non-finite state)
  7  gain synthesis failed
  8  gain verification failed";

#[derive(Parser)]
#[command(name = "cacc-sim", version, about = "Resilient CACC simulator with interval observer and attack estimator")]
#[command(after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in scenario: noise-free, noisy, nominal, degenerate.
    #[arg(long)]
    scenario: Option<String>,
    /// Scenario config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Overrides {
    /// Run seed for the noise and the initial estimator weights
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon (s).
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Observer gains: tabulated, synth or file:<path>.
    #[arg(long)]
    gains: Option<GainSource>,
    /// Run the uncompensated controller (attack estimate held at zero).
    #[arg(long)]
    baseline: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Trace CSV path.
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
        /// Also write the metrics as TOML.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Run a scenario over a range of seeds concurrently and tabulate metrics.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// First seed.
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        /// Number of seeds.
        #[arg(long, default_value_t = 10)]
        count: u64,
        /// Worker threads (defaults to available cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Solve the L1 synthesis LP for a scenario's bounds and write a gain file.
    Synthesize {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "gains.toml")]
        out: PathBuf,
    },
    /// Check the structural identities of a gain set.
    VerifyGains {
        /// Tabulated set: noise-free or noisy.
        #[arg(long, conflicts_with = "gains")]
        scenario: Option<String>,
        /// Gain file to check instead.
        #[arg(long)]
        gains: Option<PathBuf>,
        /// Allowed `‖T + NC - I‖∞`.
        #[arg(long, default_value_t = 2e-4)]
        tolerance: f64,
    },
    /// Recompute run metrics from a trace CSV.
    Metrics {
        trace: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        desired_gap: f64,
    },
    /// Render gap, position bounds and attack estimate of a trace as SVG.
    Plot {
        trace: PathBuf,
        #[arg(long, default_value = "trace.svg")]
        out: PathBuf,
    },
}

fn load_config(source: &Source) -> Result<ScenarioConfig, Error> {
    match (&source.scenario, &source.config) {
        (Some(name), _) => Ok(ScenarioConfig::named(name)?),
        (None, Some(path)) => Ok(ScenarioConfig::load(path)?),
        (None, None) => unreachable!("clap enforces one source"),
    }
}

fn apply(mut config: ScenarioConfig, o: &Overrides) -> Result<ScenarioConfig, Error> {
    if let Some(seed) = o.seed {
        config = config.with_seed(seed);
    }
    if let Some(dt) = o.dt {
        config.dt = dt;
    }
    if let Some(t_end) = o.t_end {
        config.t_end = t_end;
    }
    if let Some(g) = &o.gains {
        config.observer.gains = g.clone();
    }
    config.baseline |= o.baseline;
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn print_run(name: &str, out: &RunOutput) {
    println!("scenario          {name}");
    println!("{}", out.metrics.summary());
    println!(
        "max weight norm   {:.6} (W), {:.6} (V), {} safeguard events",
        out.weights.max_w_norm, out.weights.max_v_norm, out.weights.clamp_events
    );
}

fn cmd_run(source: &Source, o: &Overrides, out: &Path, metrics_out: Option<&Path>) -> Result<(), Error> {
    let config = apply(load_config(source)?, o)?;
    let name = config.name.clone();
    info!("running {name} for {} steps", config.steps());
    match run_scenario(config) {
        Ok(run) => {
            emit_trace(&run.trace, out)?;
            print_run(&name, &run);
            println!("trace             {}", out.display());
            if let Some(p) = metrics_out {
                let text = toml::to_string(&run.metrics).map_err(|e| Error::Verification(e.to_string()))?;
                write_file(p, &text)?;
            }
            Ok(())
        }
        Err(failure) => {
            if !failure.trace.is_empty() {
                emit_trace(&failure.trace, out)?;
                warn!("partial trace ({} rows) written to {}", failure.trace.len(), out.display());
            }
            Err(failure.error.into())
        }
    }
}

fn cmd_sweep(source: &Source, o: &Overrides, first: u64, count: u64, jobs: Option<usize>) -> Result<(), Error> {
    let base = apply(load_config(source)?, o)?;
    let seeds: Vec<u64> = (first..first + count).collect();
    let jobs = jobs
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .clamp(1, seeds.len().max(1));
    let next = AtomicUsize::new(0);
    let mut results: Vec<(u64, Result<RunMetrics, SimError>)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let k = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&seed) = seeds.get(k) else { break };
                        let r = run_scenario(base.clone().with_seed(seed)).map(|o| o.metrics).map_err(|f| f.error);
                        local.push((seed, r));
                    }
                    local
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("sweep worker panicked")).collect()
    });
    results.sort_by_key(|(seed, _)| *seed);

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let _ = writeln!(w, "seed,position_rmse,distance_rmse,min_gap,containment_rate,settling_time,collision");
    let mut first_err = None;
    for (seed, r) in results {
        match r {
            Ok(m) => {
                let settle = m.settling_time.map_or("nan".to_string(), |s| format!("{s:.4}"));
                let _ = writeln!(
                    w,
                    "{seed},{:.6},{:.6},{:.6},{:.6},{settle},{}",
                    m.position_rmse, m.distance_rmse, m.min_gap, m.containment_rate, m.collision
                );
            }
            Err(e) => {
                let _ = writeln!(w, "{seed},error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_synthesize(source: &Source, out: &Path) -> Result<(), Error> {
    let config = load_config(source)?;
    let (mut gains, _, report) = synthesize(&synthesis_problem(&config))?;
    gains.scenario_id = config.name.clone();
    write_gains(&gains, out)?;
    println!("gamma             {:.6e}", gains.gamma.unwrap_or(f64::NAN));
    println!("T + NC - I        {:.3e}", report.identity_residual);
    println!("stability sums    {:?}", report.omega_column_sums);
    println!("gains             {}", out.display());
    Ok(())
}

fn cmd_verify(scenario: Option<&str>, file: Option<&Path>, tolerance: f64) -> Result<(), Error> {
    let (gains, config): (ObserverGains, ScenarioConfig) = match (scenario, file) {
        (_, Some(path)) => (read_gains(path)?, ScenarioConfig::named("noise-free")?),
        (Some(name), None) => {
            let set = match name {
                "noise-free" => GainSet::NoiseFree,
                "noisy" => GainSet::Noisy,
                other => return Err(resilient_cacc::sim::ConfigError::UnknownScenario(other.to_string()).into()),
            };
            (tabulated_gains(set), ScenarioConfig::named(name)?)
        }
        (None, None) => (tabulated_gains(GainSet::NoiseFree), ScenarioConfig::named("noise-free")?),
    };
    let check = check_gains(&gains, &build_plant_matrices(&config.leader))?;
    println!("gain set          {}", gains.scenario_id);
    println!("T + NC - I        {:.3e} (tolerance {tolerance:e})", check.identity_residual);
    println!("max |Mx down|     {:.3e}", check.mx_down_max);
    let mut failures = Vec::new();
    if !(check.identity_residual <= tolerance) {
        failures.push(format!("identity residual {:e} exceeds {tolerance:e}", check.identity_residual));
    }
    if check.mx_down_max > 0.0 {
        failures.push(format!("Mx has negative off-diagonal entries ({:e})", check.mx_down_max));
    }
    if let Some(eig) = check.mx_eigenvalues {
        println!("Mx eigenvalues    {:.6}{:+.6}i, {:.6}{:+.6}i", eig[0].0, eig[0].1, eig[1].0, eig[1].1);
        let zero = 1e-12;
        let marginal = eig.iter().filter(|(re, im)| re.abs() <= zero && im.abs() <= zero).count();
        if marginal > 1 || eig.iter().any(|(re, _)| *re > zero) {
            failures.push("Mx has an unstable or repeated marginal mode".to_string());
        }
    }
    if failures.is_empty() {
        println!("result            ok");
        Ok(())
    } else {
        Err(Error::Verification(failures.join("; ")))
    }
}

fn cmd_metrics(trace: &Path, desired_gap: f64) -> Result<(), Error> {
    let rows = parse_trace_file(trace)?;
    let m = RunMetrics::from_trace(&rows, desired_gap).map_err(SimError::from)?;
    println!("{}", m.summary());
    Ok(())
}

fn cmd_plot(trace: &Path, out: &Path) -> Result<(), Error> {
    let rows = parse_trace_file(trace)?;
    write_file(out, &render_svg(&rows))?;
    println!("plot              {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { source, overrides, out, metrics_out } => {
            cmd_run(&source, &overrides, &out, metrics_out.as_deref())
        }
        Command::Sweep { source, overrides, first_seed, count, jobs } => {
            cmd_sweep(&source, &overrides, first_seed, count, jobs)
        }
        Command::Synthesize { source, out } => cmd_synthesize(&source, &out),
        Command::VerifyGains { scenario, gains, tolerance } => {
            cmd_verify(scenario.as_deref(), gains.as_deref(), tolerance)
        }
        Command::Metrics { trace, desired_gap } => cmd_metrics(&trace, desired_gap),
        Command::Plot { trace, out } => cmd_plot(&trace, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
