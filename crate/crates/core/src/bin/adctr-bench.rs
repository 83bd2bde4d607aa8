use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use adctr::bench::{run_bench, table2_problems, table3_problems, BenchSpec, ConfigOverrides, OutputFormat, ProblemSpec};
use adctr::oracles::{flipped_tau_stage, run_oracles, OracleCounts};
use adctr::problems::{fd_check, perturbed_points, TestProblem, CATALOGUE};
use adctr::conic::solve_tau_stage;
use adctr::Strategy;

/// Gradients are accepted when the finite-difference error stays below this.
const FD_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "adctr-bench", version, about = "Benchmarks and self-checks for the adctr solver")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    bench: BenchArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run problems and write a CSV or markdown report (the default).
    Bench(BenchArgs),
    /// Randomized oracle checks of the subproblem solvers.
    Oracles(OracleArgs),
    /// Compare analytic gradients with central differences.
    FdCheck(FdArgs),
    /// Print the problem catalogue.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Adm,
    Dctr,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Args, Clone)]
struct BenchArgs {
    /// Problem name or catalogue number; repeat and pair with --dim.
    #[arg(long = "problem")]
    problems: Vec<String>,
    /// Dimension for the matching --problem (defaults to the catalogue's small dimension).
    #[arg(long = "dim")]
    dims: Vec<usize>,
    /// Every catalogue problem at its small dimension.
    #[arg(long)]
    all: bool,
    /// Every catalogue problem at its scaled dimensions.
    #[arg(long)]
    table3: bool,
    /// Skip scaled rows above this dimension.
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long, value_enum, default_value = "adm")]
    strategy: StrategyArg,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Gradient-norm tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Initial trust radius.
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record bound data and count predicted-reduction bound violations.
    #[arg(long)]
    check_bounds: bool,
    /// Rescale the identity before the first BFGS update.
    #[arg(long)]
    scale_b0: bool,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    tau_per_case: usize,
    #[arg(long, default_value_t = 100_000)]
    grid_points: usize,
    #[arg(long, default_value_t = 500)]
    subproblems: usize,
    #[arg(long, default_value_t = 500)]
    bfgs: usize,
    /// Where failing instances are written as JSON.
    #[arg(long, default_value = "oracle-counterexamples.json")]
    out: PathBuf,
    /// Swap in a first stage with one branch flipped (the oracles should fail).
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct FdArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random points per problem besides the starting point.
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// Largest scaled dimension to check.
    #[arg(long, default_value_t = 200)]
    max_n: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Some(Command::Bench(args)) => bench(args),
        None => bench(cli.bench),
        Some(Command::Oracles(args)) => oracles(args),
        Some(Command::FdCheck(args)) => fd(args),
        Some(Command::List) => {
            let mut text = String::from("no.  name                      small n  scaled n\n");
            for e in CATALOGUE {
                text += &format!("{:>3}  {:<24}  {:>7}  {:?}\n", e.number, e.name, e.small_dim, e.scaled_dims);
            }
            emit(&text);
            ExitCode::SUCCESS
        }
    }
}

/// Write to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("adctr-bench: {msg}");
    ExitCode::from(2)
}

fn build_spec(args: &BenchArgs) -> Result<BenchSpec, String> {
    let mut problems = Vec::new();
    if args.all {
        problems.extend(table2_problems());
    }
    if args.table3 {
        problems.extend(table3_problems(args.max_n));
    }
    if !args.dims.is_empty() && args.dims.len() != args.problems.len() {
        return Err(format!("{} --problem values but {} --dim values", args.problems.len(), args.dims.len()));
    }
    for (i, name) in args.problems.iter().enumerate() {
        let n = match args.dims.get(i) {
            Some(&n) => n,
            None => adctr::problems::lookup_entry(name)
                .map(|e| e.small_dim)
                .ok_or_else(|| format!("unknown problem {name:?}"))?,
        };
        problems.push(ProblemSpec::new(name.clone(), n));
    }
    let strategies = match args.strategy {
        StrategyArg::Adm => vec![Strategy::Adm],
        StrategyArg::Dctr => vec![Strategy::Dctr],
        StrategyArg::Both => vec![Strategy::Adm, Strategy::Dctr],
    };
    let spec = BenchSpec {
        problems,
        strategies,
        overrides: ConfigOverrides {
            max_iter: args.max_iter,
            grad_tol: args.tol,
            delta0: args.delta0,
            check_bounds: args.check_bounds,
            scale_initial_hessian: args.scale_b0,
        },
        format: match args.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Markdown => OutputFormat::Markdown,
        },
        out: args.out.clone(),
        seed: args.seed,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn bench(args: BenchArgs) -> ExitCode {
    let level = match args.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    let spec = match build_spec(&args) {
        Ok(spec) => spec,
        Err(msg) => return usage_error(&msg),
    };
    let outcome = match run_bench(&spec) {
        Ok(outcome) => outcome,
        Err(e) => return usage_error(&e.to_string()),
    };
    if spec.out.is_none() {
        emit(&outcome.text);
    }
    for run in outcome.runs.iter().filter(|r| r.violations > 0) {
        eprintln!("{} n={} {}: {} bound violations", run.problem, run.n, run.strategy.label(), run.violations);
    }
    ExitCode::from(outcome.exit_code as u8)
}

fn oracles(args: OracleArgs) -> ExitCode {
    let counts = OracleCounts {
        tau_per_case: args.tau_per_case,
        grid_points: args.grid_points,
        subproblems: args.subproblems,
        bfgs: args.bfgs,
    };
    let solver = if args.inject_fault { flipped_tau_stage } else { solve_tau_stage };
    let summary = run_oracles(args.seed, &counts, solver);
    for c in &summary.checks {
        let tag = if c.failures == 0 { "PASS" } else { "FAIL" };
        emit(&format!("{tag} {:<18} {:>6} instances {:>6} failures\n", c.name, c.instances, c.failures));
    }
    if summary.passed() {
        return ExitCode::SUCCESS;
    }
    if let Err(e) = std::fs::write(&args.out, summary.to_json()) {
        eprintln!("adctr-bench: cannot write {}: {e}", args.out.display());
    } else {
        eprintln!("counterexamples written to {}", args.out.display());
    }
    ExitCode::from(1)
}

fn fd(args: FdArgs) -> ExitCode {
    let mut worst_overall: f64 = 0.0;
    for e in CATALOGUE {
        let mut dims = vec![e.small_dim];
        dims.extend(e.scaled_dims.iter().copied().filter(|&n| n <= args.max_n && n != e.small_dim));
        for n in dims {
            let p = TestProblem::new(e.kind, n).expect("catalogue dimension");
            let mut points = vec![p.x0.clone()];
            points.extend(perturbed_points(&p, args.points, args.seed));
            let worst = points.iter().map(|x| fd_check(&p, x)).fold(0.0, f64::max);
            worst_overall = worst_overall.max(worst);
            let tag = if worst <= FD_TOL { "PASS" } else { "FAIL" };
            emit(&format!("{tag} {:>2} {:<24} n={:<5} max rel err {:.3e}\n", e.number, e.name, n, worst));
        }
    }
    if worst_overall <= FD_TOL {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
