//! `bangoff`: optimize, sweep, locate critical durations and sample
//! trajectories from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bangoff::experiments::{
    self, ControlFamily, CriticalTimeEstimate, DEFAULT_PRECISION, GAP_THRESHOLD, QSL_EPS,
    TAU_MIN_EPS,
};
use bangoff::optimizer::{optimize_switch_count, optimize_type};
use bangoff::quantum::{prep_initial_state, TwoQubitState};
use bangoff::trajectory::sample_trajectory;
use bangoff::{BangOffControl, ControlRecord, ControlType, ObjectiveKind, OptimizationConfig};

/// Exit status when everything ran but some optimization hit its iteration
/// cap on every start.
const EXIT_UNCONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "bangoff", version, about = "Bang-off optimal control of two coupled qubits")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for the random starts.
    #[arg(long, global = true, env = "BANGOFF_SEED", default_value_t = 0)]
    seed: u64,

    /// Random starts per control type.
    #[arg(long, global = true, default_value_t = 100)]
    starts: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Best control for one duration and switch count (or one type).
    Optimize(OptimizeArgs),
    /// Best cost for every (T, ns) on a duration grid, as CSV.
    Sweep(SweepArgs),
    /// Bisection search for a critical duration.
    Critical(CriticalArgs),
    /// Sample a control's evolution on a time grid, as CSV.
    Trajectory(TrajectoryArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Objective {
    Fidelity,
    Concurrence,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Fidelity => ObjectiveKind::StatePrepInfidelity,
            Objective::Concurrence => ObjectiveKind::Inconcurrence,
        }
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    objective: Objective,
    /// Total duration.
    #[arg(long = "T", allow_negative_numbers = true)]
    total: f64,
    /// Switch count; optional when --type is given.
    #[arg(long)]
    ns: Option<usize>,
    /// Optimize a single control type such as P0N0.
    #[arg(long = "type")]
    control_type: Option<String>,
    /// Report path (JSON); printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    objective: Objective,
    #[arg(long, allow_negative_numbers = true)]
    t_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    t_max: f64,
    #[arg(long, allow_negative_numbers = true)]
    t_step: f64,
    #[arg(long)]
    ns_max: usize,
    /// Add a `delta_cost` column with cost(ns) - cost(ns + 1).
    #[arg(long)]
    gaps: bool,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Tc,
    Tsb,
    Qsl,
    Tauc,
    Taumin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ansatz {
    /// P t1 0 t2 P t3 0 t4 N t3 0 t2 N t1.
    Symmetric,
}

#[derive(Debug, Args)]
struct CriticalArgs {
    #[arg(long, value_enum)]
    which: Which,
    /// Search interval; defaults per target.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    bracket: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: f64,
    /// Detector threshold; defaults per target.
    #[arg(long)]
    threshold: Option<f64>,
    /// Switch count: the lower count of the gap for tc/tauc, the family
    /// for qsl/taumin.
    #[arg(long)]
    ns: Option<usize>,
    /// Restrict qsl to a fixed ansatz instead of all types.
    #[arg(long, value_enum)]
    ansatz: Option<Ansatz>,
    /// JSON record path; always printed to stdout as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Initial {
    /// Ground state at hx = -2.
    Prep,
    #[value(name = "00")]
    ZeroZero,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    /// Control file: {"type": ..., "durations": [...], "total_duration": T}.
    #[arg(long)]
    control: PathBuf,
    #[arg(long, value_enum)]
    initial: Initial,
    #[arg(long)]
    step: f64,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct PartnerRecord {
    #[serde(rename = "type")]
    control_type: String,
    durations: Vec<f64>,
}

/// Optimizer report. The first three fields make it a valid control file.
#[derive(Debug, Serialize)]
struct OptimizeReport {
    #[serde(rename = "type")]
    control_type: String,
    durations: Vec<f64>,
    total_duration: f64,
    objective: &'static str,
    cost: f64,
    switch_count: usize,
    converged: bool,
    seed: u64,
    starts: usize,
    flip_partner: PartnerRecord,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: some optimizations stopped at the iteration cap");
            ExitCode::from(EXIT_UNCONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the run finished with unclean convergence flags.
fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("setting up the worker pool")?;
    }
    let config = OptimizationConfig {
        n_starts: cli.starts,
        rng_seed: cli.seed,
        ..OptimizationConfig::default()
    };
    config.validate()?;
    match cli.command {
        Command::Optimize(args) => cmd_optimize(&args, &config),
        Command::Sweep(args) => cmd_sweep(&args, &config),
        Command::Critical(args) => cmd_critical(&args, &config),
        Command::Trajectory(args) => cmd_trajectory(&args),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_optimize(args: &OptimizeArgs, config: &OptimizationConfig) -> Result<bool> {
    if !(args.total > 0.0 && args.total.is_finite()) {
        bail!("--T must be positive, got {}", args.total);
    }
    let kind = ObjectiveKind::from(args.objective);
    let (optimum, converged) = match (&args.control_type, args.ns) {
        (Some(word), ns) => {
            let t: ControlType = word.parse()?;
            if let Some(ns) = ns {
                if t.switch_count() != ns {
                    bail!("type {t} has {} switches, not {ns}", t.switch_count());
                }
            }
            let o = optimize_type(&t, args.total, kind, config)?;
            let c = o.converged;
            (o, c)
        }
        (None, Some(ns)) => {
            let r = optimize_switch_count(ns, args.total, kind, config)?;
            let c = r.all_converged();
            (r.best, c)
        }
        (None, None) => bail!("give --ns or --type"),
    };
    let control = optimum.control();
    let flipped = control.flipped();
    let report = OptimizeReport {
        control_type: optimum.control_type.to_string(),
        durations: optimum.best_durations.clone(),
        total_duration: args.total,
        objective: kind.name(),
        cost: optimum.best_cost,
        switch_count: optimum.control_type.switch_count(),
        converged,
        seed: config.rng_seed,
        starts: config.n_starts,
        flip_partner: PartnerRecord {
            control_type: flipped.control_type().to_string(),
            durations: flipped.durations().to_vec(),
        },
    };
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    if args.out.is_some() {
        println!("{} {:?} cost {:e}", report.control_type, report.durations, report.cost);
    }
    Ok(converged)
}

fn cmd_sweep(args: &SweepArgs, config: &OptimizationConfig) -> Result<bool> {
    let grid = experiments::uniform_grid(args.t_min, args.t_max, args.t_step)?;
    let rows = experiments::sweep(args.objective.into(), &grid, args.ns_max, config)?;
    let out = output(args.out.as_deref())?;
    experiments::write_sweep_csv(&rows, args.gaps, out)?;
    eprintln!("{} rows over {} durations", rows.len(), grid.len());
    Ok(rows.iter().all(|r| r.converged))
}

struct CriticalDefaults {
    bracket: (f64, f64),
    threshold: f64,
    ns: usize,
}

fn critical_defaults(which: Which, config: &OptimizationConfig) -> CriticalDefaults {
    let (bracket, threshold, ns) = match which {
        Which::Tc => ((0.3, 0.45), GAP_THRESHOLD, 1),
        Which::Tsb => ((1.4, 1.7), config.simplex_floor, 2),
        Which::Qsl => ((2.6, 2.9), QSL_EPS, 9),
        Which::Tauc => ((0.3, 0.45), GAP_THRESHOLD, 0),
        Which::Taumin => ((1.6, 1.9), TAU_MIN_EPS, 3),
    };
    CriticalDefaults {
        bracket,
        threshold,
        ns,
    }
}

fn run_critical(args: &CriticalArgs, config: &OptimizationConfig) -> Result<CriticalTimeEstimate> {
    let d = critical_defaults(args.which, config);
    let bracket = match &args.bracket {
        Some(b) => (b[0], b[1]),
        None => d.bracket,
    };
    let threshold = args.threshold.unwrap_or(d.threshold);
    let ns = args.ns.unwrap_or(d.ns);
    if args.ansatz.is_some() && args.which != Which::Qsl {
        bail!("--ansatz only applies to --which qsl");
    }
    let precision = args.precision;
    let estimate = match args.which {
        Which::Tc => experiments::find_gap_onset(
            ObjectiveKind::StatePrepInfidelity,
            ns,
            bracket,
            threshold,
            precision,
            config,
        )?,
        Which::Tauc => experiments::find_gap_onset(
            ObjectiveKind::Inconcurrence,
            ns,
            bracket,
            threshold,
            precision,
            config,
        )?,
        Which::Tsb => {
            if args.threshold.is_some() || args.ns.is_some() {
                bail!("tsb uses the simplex floor on type P0N; --threshold and --ns do not apply");
            }
            experiments::find_tsb(bracket, precision, config)?
        }
        Which::Qsl => {
            let family = match args.ansatz {
                Some(Ansatz::Symmetric) => ControlFamily::symmetric_ansatz(),
                None => ControlFamily::SwitchCount(ns),
            };
            experiments::estimate_reachability(
                ObjectiveKind::StatePrepInfidelity,
                &family,
                threshold,
                bracket,
                precision,
                config,
            )?
        }
        Which::Taumin => experiments::estimate_tau_min(ns, threshold, bracket, precision, config)?,
    };
    Ok(estimate)
}

fn cmd_critical(args: &CriticalArgs, config: &OptimizationConfig) -> Result<bool> {
    let estimate = run_critical(args, config)?;
    let text = estimate.to_json();
    println!("{text}");
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{text}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(estimate.converged)
}

fn cmd_trajectory(args: &TrajectoryArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.control)
        .with_context(|| format!("reading {}", args.control.display()))?;
    let record = ControlRecord::from_json(&text)
        .with_context(|| format!("parsing {}", args.control.display()))?;
    let control: BangOffControl = record.to_control()?;
    let initial = match args.initial {
        Initial::Prep => *prep_initial_state(),
        Initial::ZeroZero => TwoQubitState::zero_zero(),
    };
    let samples = sample_trajectory(&initial, &control, args.step)?;

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record([
        "t", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c", "re_d", "im_d", "x", "y", "z", "c1_sq",
        "c2_sq", "c3_sq", "concurrence",
    ])?;
    for s in &samples {
        let mut record = vec![s.time.to_string()];
        for a in s.state.amplitudes() {
            record.push(a.re.to_string());
            record.push(a.im.to_string());
        }
        record.extend([s.bloch.x, s.bloch.y, s.bloch.z].map(|v| v.to_string()));
        record.extend(s.bell.weights().map(|v| v.to_string()));
        record.push(s.concurrence.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(true)
}
