use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sask_cli::preset::default_for;
use sask_cli::{
    compare, find_preset, presets, run, write_records, BenchmarkPreset, OutputFormat, RunOutcome,
    SolverKind,
};
use sask_core::pde::{make_problem, ProblemKind};

const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sask",
    version,
    about = "Sparse-grid adaptive spectral Koopman benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run presets (or a problem with overrides) with one solver.
    Run(RunArgs),
    /// Run SASK and RK4 on the same presets.
    Compare(RunArgs),
    /// Regenerate a stored RK4 reference trajectory.
    GenReference(GenArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Preset name; repeat to run several.
    #[arg(long = "preset")]
    presets: Vec<String>,
    /// Problem to run without a preset (uses that problem's default preset).
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    #[arg(long)]
    m: Option<usize>,
    /// Final time.
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// Number of check points.
    #[arg(long)]
    n: Option<usize>,
    /// Neighbourhood radius.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    kappa: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    /// RK4 step.
    #[arg(long)]
    dt: Option<f64>,
    /// Burgers viscosity.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputFormat,
    /// Write records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `x,u,u_ref` for a single run.
    #[arg(long)]
    dump_solution: Option<PathBuf>,
    /// Solves per run; the median wall time is reported.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Reserved; all solvers are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Run independent presets concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "burgers")]
    problem: ProblemKind,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 0.005)]
    nu: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    final_time: f64,
    #[arg(long, default_value_t = 1e-5)]
    dt: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Solver(String),
}

fn resolve(args: &RunArgs) -> Result<Vec<BenchmarkPreset>, Failure> {
    let mut base = Vec::new();
    for name in &args.presets {
        base.push(find_preset(name).ok_or_else(|| {
            let known: Vec<String> = presets().into_iter().map(|p| p.name).collect();
            Failure::Usage(format!(
                "unknown preset {name:?}; known presets: {}",
                known.join(", ")
            ))
        })?);
    }
    if let Some(problem) = args.problem {
        if !base.is_empty() {
            return Err(Failure::Usage(
                "use either --preset or --problem, not both".into(),
            ));
        }
        let mut p = default_for(problem);
        p.name = problem.name().to_string();
        base.push(p);
    }
    if base.is_empty() {
        return Err(Failure::Usage("need --preset or --problem".into()));
    }
    for p in &mut base {
        if let Some(s) = args.solver {
            p.solver = s;
        }
        if let Some(m) = args.m {
            p.m = m;
        }
        if let Some(t) = args.final_time {
            p.final_time = t;
        }
        if let Some(n) = args.n {
            p.sask.n = n;
        }
        if let Some(r) = args.r {
            p.sask.r = r;
        }
        if let Some(k) = args.kappa {
            p.sask.kappa = k;
        }
        if let Some(g) = args.gamma {
            p.sask.gamma = g;
        }
        if let Some(dt) = args.dt {
            p.dt = dt;
        }
        if let Some(nu) = args.nu {
            p.params.nu = nu;
        }
    }
    Ok(base)
}

fn run_all<T: Send>(
    presets: &[BenchmarkPreset],
    parallel: bool,
    job: impl Fn(&BenchmarkPreset) -> sask_core::Result<T> + Sync,
) -> Result<Vec<T>, Failure> {
    let results: Vec<sask_core::Result<T>> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = presets.iter().map(|p| s.spawn(|| job(p))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        })
    } else {
        presets.iter().map(&job).collect()
    };
    results
        .into_iter()
        .zip(presets)
        .map(|(r, p)| r.map_err(|e| Failure::Solver(format!("{}: {e}", p.name))))
        .collect()
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn dump(outcome: &RunOutcome, path: &Option<PathBuf>) -> Result<(), Failure> {
    if let Some(path) = path {
        let f = File::create(path)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        outcome
            .write_solution(BufWriter::new(f))
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Presets => {
            for p in presets() {
                println!(
                    "{:<14} {:<9} m={:<4} T={:<5} n={:<4} r={:<4} kappa={} gamma={:<4} dt={:e}",
                    p.name,
                    p.problem.name(),
                    p.m,
                    p.final_time,
                    p.sask.n,
                    p.sask.r,
                    p.sask.kappa,
                    p.sask.gamma,
                    p.dt
                );
            }
            Ok(())
        }
        Command::Run(args) => {
            let resolved = resolve(&args)?;
            if args.dump_solution.is_some() && resolved.len() != 1 {
                return Err(Failure::Usage(
                    "--dump-solution needs exactly one run".into(),
                ));
            }
            let outcomes = run_all(&resolved, args.parallel, |p| run(p, args.repeat))?;
            let records: Vec<_> = outcomes.iter().map(|o| o.record.clone()).collect();
            write_records(&records, args.output, open_output(&args.out)?)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            dump(&outcomes[0], &args.dump_solution)
        }
        Command::Compare(args) => {
            let resolved = resolve(&args)?;
            if args.dump_solution.is_some() {
                return Err(Failure::Usage(
                    "--dump-solution is only supported by run".into(),
                ));
            }
            let comparisons = run_all(&resolved, args.parallel, |p| compare(p, args.repeat))?;
            let mut records = Vec::new();
            for c in &comparisons {
                eprintln!("{}", c.summary());
                records.extend(c.records());
            }
            write_records(&records, args.output, open_output(&args.out)?)
                .map_err(|e| Failure::Usage(e.to_string()))
        }
        Command::GenReference(args) => {
            let problem = make_problem(args.problem, args.m, Some(args.nu))
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let reference = problem
                .generate_reference(args.final_time, args.dt)
                .map_err(|e| Failure::Solver(e.to_string()))?;
            let mut out = open_output(&args.out)?;
            out.write_all(reference.to_csv().as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
