use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use graph_inspection::baseline::brute_force_tour;
use graph_inspection::circuit::{build, CircuitType, Target};
use graph_inspection::instance::{
    compute_bounds, generate_random, parse_instance, preprocess, write_instance, Bounds, GenConfig,
};
use graph_inspection::mld::Execution;
use graph_inspection::pipeline::{run_solver, Solver, SolverConfig};
use graph_inspection::recovery::RecoveryStrategy;
use graph_inspection::search::SearchStrategy;
use graph_inspection::{Error, RawInstance};
use rand::{RngCore, SeedableRng};

mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const RECOVERY: u8 = 3;
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
    pub const NO_INPUT: u8 = 66;
}

#[derive(Parser)]
#[command(name = "gi", version, about = "Minimum-weight color-collecting closed walks via arithmetic circuits")]
struct Cli {
    /// Worker threads for circuit evaluation (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the result.
    Solve(SolveArgs),
    /// Run a configuration matrix and write CSV to standard output.
    Bench(BenchArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Print circuit sizes without evaluating.
    Stats(StatsArgs),
    /// Solve exactly with a baseline solver.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Scaling factor applied to edge weights before rounding.
    #[arg(long = "scale", default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value = "compact", value_parser = parse_circuit)]
    circuit: CircuitType,
    #[arg(long, default_value = "unified", value_parser = parse_search)]
    search: SearchStrategy,
    #[arg(long, default_value = "mc", value_parser = parse_recovery)]
    recovery: RecoveryStrategy,
    /// Failure count threshold.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    theta: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "circuit", value_parser = parse_solver)]
    solver: Solver,
    /// Evaluate characters on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files; each forms its own block of matrix cells.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "naive,standard,compact,semi-compact", value_parser = parse_circuit)]
    circuits: Vec<CircuitType>,
    #[arg(long, value_delimiter = ',', default_value = "unified", value_parser = parse_search)]
    searches: Vec<SearchStrategy>,
    #[arg(long, value_delimiter = ',', default_value = "lv", value_parser = parse_recovery)]
    recoveries: Vec<RecoveryStrategy>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    scales: Vec<f64>,
    /// Repetitions per configuration.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    theta: u64,
    /// Master seed; every cell derives its own seed from it and its index.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run cells concurrently.
    #[arg(long)]
    parallel_cells: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10.0)]
    weight_max: f64,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Integer weights in 1..=weight-max.
    #[arg(long)]
    integral: bool,
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "scale", default_value_t = 1.0)]
    lambda: f64,
    /// Only this construction; all four otherwise.
    #[arg(long, value_parser = parse_circuit)]
    circuit: Option<CircuitType>,
    /// Single-output circuit for this weight; one output per weight in the
    /// bounds otherwise.
    #[arg(long)]
    ell: Option<i64>,
    /// Report sizes after dropping nodes that cannot reach an output.
    #[arg(long)]
    pruned: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "scale", default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value = "dp", value_parser = parse_solver)]
    solver: Solver,
}

fn parse_circuit(s: &str) -> Result<CircuitType, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_search(s: &str) -> Result<SearchStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_recovery(s: &str) -> Result<RecoveryStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// An error tagged with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible { .. } => exit::INFEASIBLE,
            Error::RecoveryFailed(_) => exit::RECOVERY,
            Error::Parse(_) => exit::DATA,
            Error::InvalidParameter(_) => exit::USAGE,
            _ => exit::FAILURE,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: exit::FAILURE, error }
    }
}

type CmdResult = Result<(), Failure>;

fn load(path: &Path) -> Result<RawInstance, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure {
        code: exit::NO_INPUT,
        error: anyhow::Error::new(e).context(format!("cannot read {}", path.display())),
    })?;
    parse_instance(&bytes).map_err(|e| Failure {
        code: exit::DATA,
        error: anyhow::Error::new(e).context(format!("cannot parse {}", path.display())),
    })
}

fn solver_config(common: &Common, execution: Execution) -> SolverConfig {
    SolverConfig {
        circuit_type: common.circuit,
        search: common.search,
        recovery: common.recovery,
        theta: common.theta as usize,
        seed: common.seed,
        execution,
        ..SolverConfig::default()
    }
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let raw = load(&args.input)?;
    let execution = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let cfg = solver_config(&args.common, execution);
    let report = run_solver(&raw, args.common.lambda, args.solver, &cfg)?;
    log::info!(
        "search {:.1} ms, recovery {:.1} ms, {} evaluations, peak rss {:?} KiB",
        report.telemetry.search_ms,
        report.telemetry.recovery_ms,
        report.telemetry.search.evaluations,
        report.telemetry.peak_rss_kib
    );
    print!("{}", report.result_text());
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> CmdResult {
    let raw = load(&args.input)?;
    let Solver::Baseline(which) = args.solver else {
        return Err(Error::InvalidParameter("oracle runs dp or brute".into()).into());
    };
    let report = graph_inspection::pipeline::solve_baseline(&raw, args.lambda, which)?;
    print!("{}", report.result_text());
    if let Some(states) = report.telemetry.dp_states {
        log::info!("dp states {states}");
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let cfg = GenConfig {
        n: args.n,
        k: args.k,
        t: args.t,
        weight_max: args.weight_max,
        density: args.density,
        seed: args.seed,
        integral: args.integral,
    };
    let text = write_instance(&generate_random(&cfg)?);
    match args.output {
        Some(path) => std::fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::from)?,
        None => std::io::stdout().write_all(text.as_bytes()).context("stdout")?,
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CmdResult {
    let raw = load(&args.input)?;
    let mi = preprocess(&raw, args.lambda)?;
    let bounds = compute_bounds(&mi);
    let (bounds, target) = match args.ell {
        Some(l) => (Bounds { lo: bounds.lo.min(l), hi: bounds.hi.max(l) }, Target::Single(l)),
        None => (bounds, Target::AllOutputs),
    };
    let types = args.circuit.map_or(CircuitType::ALL.to_vec(), |c| vec![c]);
    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(["type", "layers", "nodes", "edges", "outputs"]).context("stdout")?;
    for ct in types {
        let c = build(ct, &mi, bounds, target)?;
        let size = if args.pruned { c.size() } else { c.info().expect("constructed").constructed };
        out.serialize((ct.name(), mi.t(), size.nodes, size.edges, c.outputs().len()))
            .context("stdout")?;
    }
    out.flush().context("stdout")?;
    Ok(())
}

#[derive(Clone)]
struct Cell {
    instance: usize,
    lambda: f64,
    circuit: CircuitType,
    search: SearchStrategy,
    recovery: RecoveryStrategy,
    seed: u64,
}

/// Seed for cell `index`, a pure function of the master seed and the index.
fn cell_seed(master: u64, index: usize) -> u64 {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Real-weight optimum over the metric closure of the input graph.
fn real_optimum(raw: &RawInstance) -> Option<f64> {
    let mi = preprocess(raw, 1.0).ok()?;
    let dist = |a: usize, b: usize| mi.raw_dist(mi.original_id(a), mi.original_id(b));
    brute_force_tour(mi.n(), dist, mi.colors(), mi.t(), 0.0).ok().map(|(w, _)| w)
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let instances: Vec<(String, RawInstance)> = args
        .input
        .iter()
        .map(|p| Ok((p.display().to_string(), load(p)?)))
        .collect::<Result<_, Failure>>()?;
    let oracles: Vec<Option<f64>> = instances.iter().map(|(_, raw)| real_optimum(raw)).collect();

    let mut cells = Vec::new();
    for instance in 0..instances.len() {
        for &lambda in &args.scales {
            for &circuit in &args.circuits {
                for &search in &args.searches {
                    for &recovery in &args.recoveries {
                        for _ in 0..args.repeats {
                            let seed = cell_seed(args.seed, cells.len());
                            cells.push(Cell { instance, lambda, circuit, search, recovery, seed });
                        }
                    }
                }
            }
        }
    }

    let run = |cell: &Cell| -> Vec<String> {
        let (name, raw) = &instances[cell.instance];
        let cfg = SolverConfig {
            circuit_type: cell.circuit,
            search: cell.search,
            recovery: cell.recovery,
            theta: args.theta as usize,
            seed: cell.seed,
            ..SolverConfig::default()
        };
        let mut row = vec![
            name.clone(),
            raw.n().to_string(),
            raw.k().to_string(),
            raw.t().to_string(),
            cell.lambda.to_string(),
            cell.circuit.name().to_string(),
            cell.search.name().to_string(),
            cell.recovery.name().to_string(),
            args.theta.to_string(),
            cell.seed.to_string(),
        ];
        match run_solver(raw, cell.lambda, Solver::Circuit, &cfg) {
            Ok(r) => {
                let t = &r.telemetry;
                let size = [Some(t.search.largest_circuit), t.recovery_circuit]
                    .into_iter()
                    .flatten()
                    .max_by_key(|s| s.edges)
                    .unwrap_or_default();
                let ratio = oracles[cell.instance]
                    .map(|opt| if opt > 0.0 { (r.real_weight / opt).to_string() } else { "1".into() })
                    .unwrap_or_default();
                row.extend([
                    size.nodes.to_string(),
                    size.edges.to_string(),
                    r.scaled_weight.to_string(),
                    r.real_weight.to_string(),
                    ratio,
                    format!("{:.3}", t.search_ms),
                    format!("{:.3}", t.recovery_ms),
                    format!("{:.3}", t.total_ms),
                    String::new(),
                ]);
            }
            Err(e) => {
                row.extend(std::iter::repeat(String::new()).take(8));
                row.push(e.to_string());
            }
        }
        row
    };

    let rows: Vec<Vec<String>> = if args.parallel_cells {
        use rayon::prelude::*;
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    };

    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(BENCH_HEADER).context("stdout")?;
    for row in rows {
        out.write_record(&row).context("stdout")?;
    }
    out.flush().context("stdout")?;
    Ok(())
}

const BENCH_HEADER: [&str; 19] = [
    "instance",
    "n",
    "k",
    "t",
    "lambda",
    "circuit",
    "search",
    "recovery",
    "theta",
    "seed",
    "nodes",
    "edges",
    "scaled_weight",
    "real_weight",
    "ratio_to_oracle",
    "search_ms",
    "recovery_ms",
    "total_ms",
    "error",
];

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(Failure { code, error }) => {
            if code == exit::INFEASIBLE {
                println!("status infeasible");
            } else if code == exit::RECOVERY {
                println!("status recovery_failed");
            }
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
