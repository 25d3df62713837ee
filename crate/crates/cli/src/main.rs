use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphseg::io::{exit_code, read_experiment_spec, run_segment, run_simulate, RunConfig, TraceKind};
use graphseg::select::Criterion;
use graphseg::sim::ExperimentSpec;
use graphseg::{ArConfig, Error};

#[derive(Parser)]
#[command(name = "graphseg", version, about = "Segment graph signals into zones of constant value")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a penalty path on input files and write the selected segmentation.
    Segment(SegmentArgs),
    /// Run the synthetic grid experiment.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SegmentArgs {
    /// JSON config with the same field names as the flags (snake_case).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge list CSV with header `src,dst`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// GeoJSON FeatureCollection of polygons; rook contiguity gives the graph.
    #[arg(long)]
    geojson: Option<PathBuf>,
    /// Observations CSV with header `id,value`.
    #[arg(long)]
    values: Option<PathBuf>,
    /// Noise precision matrix in Matrix Market format; identity if absent.
    #[arg(long)]
    precision: Option<PathBuf>,
    /// Centroids CSV with header `id,x,y`, used by `--bridge`.
    #[arg(long)]
    centroids: Option<PathBuf>,
    /// Join disconnected components by their closest centroids.
    #[arg(long)]
    bridge: bool,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    lambda_count: Option<usize>,
    /// Explicit ascending penalty list, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_criterion)]
    criterion: Option<Criterion>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Replace fitted values by per-zone least-squares levels.
    #[arg(long)]
    refit: bool,
    #[arg(long, value_enum)]
    trace: Option<TraceArg>,
    /// Probe count of the stochastic trace.
    #[arg(long)]
    probes: Option<usize>,
    /// Seed of the stochastic trace.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TraceArg {
    Auto,
    Exact,
    Stochastic,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment spec JSON; built-in defaults if absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the spec seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the grid size of the spec.
    #[arg(long)]
    lambda_count: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// Fill the `seconds` column; otherwise it is zero and output is reproducible.
    #[arg(long)]
    timings: bool,
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn segment(args: SegmentArgs) -> graphseg::Result<()> {
    let file = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        graph: args.graph,
        geojson: args.geojson,
        values: args.values,
        precision: args.precision,
        centroids: args.centroids,
        bridge: args.bridge,
        lambda_min: args.lambda_min,
        lambda_max: args.lambda_max,
        lambda_count: args.lambda_count,
        lambdas: args.lambdas,
        criterion: args.criterion,
        epsilon: args.epsilon,
        tol: args.tol,
        cutoff: args.cutoff,
        max_iter: args.max_iter,
        refit: args.refit,
        trace: args.trace.map(|t| match t {
            TraceArg::Auto => TraceKind::Auto,
            TraceArg::Exact => TraceKind::Exact,
            TraceArg::Stochastic => TraceKind::Stochastic,
        }),
        probes: args.probes,
        seed: args.seed,
        out: args.out,
    };
    let report = run_segment(&file.overlay(flags))?;
    print!("{}", report.summary());
    Ok(())
}

fn simulate(args: SimulateArgs) -> graphseg::Result<()> {
    let mut spec = match &args.config {
        Some(path) => read_experiment_spec(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(c) = args.lambda_count {
        spec.lambda.count = c;
    }
    let d = ArConfig::default();
    let cfg = ArConfig {
        epsilon: args.epsilon.unwrap_or(d.epsilon),
        tol: args.tol.unwrap_or(d.tol),
        cutoff: args.cutoff.unwrap_or(d.cutoff),
        ..d
    };
    let outcome = run_simulate(&spec, &cfg, &args.out, args.timings)?;
    println!(
        "{:>8} {:>9} {:>13} {:>10} {:>8} {:>8} {:>6} {:>6}",
        "sigma", "criterion", "lambda", "rmse", "rand", "ari", "zones", "true"
    );
    for r in &outcome.rows {
        println!(
            "{:>8} {:>9} {:13.6e} {:10.4} {:8.4} {:8.4} {:>6} {:>6}",
            r.sigma, r.criterion, r.lambda, r.rmse, r.effective.rand, r.effective.ari, r.zones_est, r.effective.zones_true
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn init_threads() {
    let Ok(v) = std::env::var("GRAPHSEG_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("cannot size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring GRAPHSEG_THREADS={v}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    let result = match cli.command {
        Command::Segment(a) => segment(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
