use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use chanalloc::channel::{ChannelRealization, PowerProfile};
use chanalloc::dynamics::{run_dynamics, DynamicsConfig, ResetSchedule};
use chanalloc::experiment::{
    emit_results, run_experiment, write_csv, ExperimentKind, ExperimentSpec, GameChoice, MRule,
    WeightRange,
};
use chanalloc::game::GameConfig;
use chanalloc::{rng, Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chanalloc", version, about = "Game-theoretic distributed channel allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and emit aggregate CSV plus per-realization JSONL.
    Run(Box<RunArgs>),
    /// Run one fictitious-play trajectory and write it as JSONL, one line per iteration.
    Trace(TraceArgs),
}

#[derive(Args)]
struct Overrides {
    /// Network sizes (N = K), comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// M rules, comma separated: `fixed:9`, `9` or `ceil:3` for ceil(3 ln N).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<String>>,
    /// Mean interference-free SNR values in dB.
    #[arg(long = "snr-db", value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    /// Fictitious-play step sizes in (0, 1].
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Reset check period; 0 disables resets.
    #[arg(long)]
    tau: Option<usize>,
    /// Run the reset check only once, at t = tau.
    #[arg(long)]
    one_shot_reset: bool,
    #[arg(long = "t-max")]
    t_max: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `naive` or `mfsig`.
    #[arg(long)]
    game: Option<String>,
    #[arg(long = "cross-gain-scale")]
    cross_gain_scale: Option<f64>,
    /// Uniform random weights in [MIN, MAX], given as `MIN,MAX`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    n0: Option<f64>,
    /// Cap on profiles visited by exhaustive equilibrium enumeration.
    #[arg(long)]
    budget: Option<u128>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory for results.csv and realizations.jsonl; CSV goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also save every dynamics trajectory into the output directory.
    #[arg(long)]
    save_trajectories: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value = "fixed:9")]
    m: String,
    #[arg(long = "snr-db", default_value_t = 20.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 60)]
    tau: usize,
    #[arg(long = "t-max", default_value_t = 300)]
    t_max: usize,
    /// Realization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "mfsig")]
    game: String,
    /// JSONL destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_game(s: &str) -> Result<GameChoice> {
    match s {
        "naive" => Ok(GameChoice::Naive),
        "mfsig" => Ok(GameChoice::Mfsig),
        _ => Err(Error::InvalidConfig(format!("unknown game '{s}' (naive or mfsig)"))),
    }
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let o = &args.overrides;
    let mut spec = match (&args.config, &args.experiment) {
        (Some(path), _) => ExperimentSpec::load(path)?,
        (None, Some(kind)) => {
            let n = o
                .n
                .clone()
                .ok_or_else(|| Error::InvalidConfig("--n is required without --config".into()))?;
            ExperimentSpec::new(ExperimentKind::parse(kind)?, n)
        }
        (None, None) => {
            return Err(Error::InvalidConfig(
                "either --config or --experiment is required".into(),
            ))
        }
    };
    if let Some(kind) = &args.experiment {
        spec.experiment = ExperimentKind::parse(kind)?;
    }
    if let Some(n) = &o.n {
        spec.n = n.clone();
    }
    if let Some(m) = &o.m {
        spec.m = m.iter().map(|s| MRule::parse(s)).collect::<Result<_>>()?;
    }
    if let Some(v) = &o.snr_db {
        spec.snr_db = v.clone();
    }
    if let Some(v) = &o.alpha {
        spec.alpha = v.clone();
    }
    if let Some(v) = o.tau {
        spec.tau = v;
    }
    if o.one_shot_reset {
        spec.reset_schedule = ResetSchedule::OneShot;
    }
    if let Some(v) = o.t_max {
        spec.t_max = v;
    }
    if let Some(v) = o.realizations {
        spec.realizations = v;
    }
    if let Some(v) = o.seed {
        spec.seed = v;
    }
    if let Some(g) = &o.game {
        spec.game = parse_game(g)?;
    }
    if let Some(v) = o.cross_gain_scale {
        spec.cross_gain_scale = v;
    }
    if let Some(w) = &o.weights {
        spec.weights = Some(WeightRange { min: w[0], max: w[1] });
    }
    if let Some(v) = o.n0 {
        spec.n0 = v;
    }
    if let Some(v) = o.budget {
        spec.enumeration_budget = v;
    }
    if args.out.is_some() {
        spec.out = args.out.clone();
    }
    spec.save_trajectories |= args.save_trajectories;
    Ok(spec)
}

fn run(args: RunArgs) -> Result<()> {
    let spec = build_spec(&args)?;
    if let Some(dir) = &spec.out {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
    }
    let results = run_experiment(&spec)?;
    match &spec.out {
        Some(dir) => emit_results(&results, &dir.join("results.csv"), &dir.join("realizations.jsonl")),
        None => write_csv(&results, io::stdout().lock()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn trace(args: TraceArgs) -> Result<()> {
    let real = ChannelRealization::<f64>::generate(args.n, args.n, args.seed)?;
    let powers = PowerProfile::from_snr_db(args.n, args.snr_db, 1.0)?;
    let m = MRule::parse(&args.m)?.resolve(args.n, args.n);
    let game = GameConfig::new(parse_game(&args.game)?.game_kind(m), &real, &powers)?;
    let dynamics = DynamicsConfig::constant(args.alpha, args.tau, args.t_max);
    let traj = run_dynamics(&game, &dynamics, rng::dynamics_seed(args.seed))?;
    let io_err = |path: PathBuf| move |e| Error::Io { path, source: e };
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(io_err(path.clone()))?;
            traj.write_jsonl(BufWriter::new(file))
                .map_err(io_err(path.clone()))
        }
        None => traj
            .write_jsonl(io::stdout().lock())
            .map_err(io_err("<stdout>".into())),
    }
}

fn report(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", e.to_string()),
    };
    let outcome = match cli.command {
        Command::Run(args) => run(*args),
        Command::Trace(args) => trace(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), e.to_string()),
    }
}
