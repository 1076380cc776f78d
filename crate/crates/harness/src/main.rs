use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use cbgp_core::compiler::compile_genome;
use cbgp_core::evolution::{simplify, Evaluator, GaConfig};
use cbgp_core::genome::Genome;
use cbgp_core::problems::{export_cases, problem, ProblemSpec, PROBLEM_NAMES};
use cbgp_core::runtime::builtins::reference_page;
use cbgp_harness::experiment::{render_program, report_from_logs, simplify_rng};
use cbgp_harness::report::comparison_table;
use cbgp_harness::{report_table, run_experiment, ConfigError, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

const EXIT_NO_PROGRAM: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "cbgp", version, about = "Code building genetic programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded evolutionary runs and write logs and a report.
    Run(RunArgs),
    /// Compile a genome into source for a problem's signature.
    Compile(GenomeArgs),
    /// Shrink a genome without increasing its training error.
    Simplify(SimplifyArgs),
    /// Aggregate run logs from an output directory into tables.
    Report(ReportArgs),
    /// Export a problem's generated train/test cases as JSON lines.
    Cases(CasesArgs),
    /// Print the builtin function reference.
    Builtins,
    /// List the available problems.
    Problems,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; omitted keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, env = "CBGP_OUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    problems: Vec<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also print published reference rates next to the measured ones.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct GenomeArgs {
    #[arg(long, short)]
    problem: String,
    /// Genome text; read from stdin when absent.
    genome: Option<String>,
}

#[derive(Args)]
struct SimplifyArgs {
    #[command(flatten)]
    genome: GenomeArgs,
    /// Seed of the case set and of the simplification steps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = GaConfig::default().simplification_steps)]
    steps: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(env = "CBGP_OUT_DIR", default_value = "cbgp-out")]
    dir: PathBuf,
    /// Print CSV instead of the table.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct CasesArgs {
    #[arg(long, short)]
    problem: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Config(ConfigError),
    NoProgram,
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn lookup(name: &str) -> Result<&'static ProblemSpec, Failure> {
    problem(name).ok_or_else(|| Failure::Config(ConfigError::UnknownProblem(name.to_owned())))
}

fn read_genome(args: &GenomeArgs) -> anyhow::Result<Genome> {
    let text = match &args.genome {
        Some(g) => g.clone(),
        None => {
            let mut buf = String::new();
            io::stdin().read_to_string(&mut buf).context("reading genome from stdin")?;
            buf
        }
    };
    text.trim().parse().map_err(|e| anyhow!("bad genome: {e}"))
}

fn run(args: RunArgs) -> Result<ExitCode, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = args.output_dir {
        cfg.output_dir = dir;
    }
    if !args.problems.is_empty() {
        cfg.problems = args.problems;
    }
    cfg.runs = args.runs.unwrap_or(cfg.runs);
    cfg.base_seed = args.base_seed.unwrap_or(cfg.base_seed);
    cfg.workers = args.workers.unwrap_or(cfg.workers);
    cfg.validate()?;
    let outcome = run_experiment(&cfg).map_err(anyhow::Error::from)?;
    print!("{}", report_table(&outcome.report));
    if args.compare {
        print!("\n{}", comparison_table(&outcome.report));
    }
    Ok(if outcome.has_failures() { ExitCode::from(EXIT_PARTIAL) } else { ExitCode::SUCCESS })
}

fn compile(args: GenomeArgs) -> Result<ExitCode, Failure> {
    let p = lookup(&args.problem)?;
    let genome = read_genome(&args)?;
    let ast = compile_genome(&genome, &p.signature, &p.type_env()).map_err(|_| Failure::NoProgram)?;
    println!("{}", cbgp_core::ast::render_source(&ast, p.name, &p.signature.arg_names));
    println!("type: {}", ast.ty);
    Ok(ExitCode::SUCCESS)
}

fn simplify_cmd(args: SimplifyArgs) -> Result<ExitCode, Failure> {
    let p = lookup(&args.genome.problem)?;
    let genome = read_genome(&args.genome)?;
    let cases = p.generate_cases(args.seed);
    let eval = Evaluator::new(p);
    let before = eval.evaluate(genome, &cases.train);
    let after = simplify(&before, args.steps, &eval, &cases.train, &mut simplify_rng(args.seed));
    let show = |label: &str, ind: &cbgp_core::evolution::Individual| {
        println!("{label} genome ({} genes, error {}): {}", ind.genome.len(), ind.total_error, ind.genome);
        println!("{label} program: {}", render_program(p, ind).unwrap_or_else(|| "-".to_owned()));
    };
    show("before", &before);
    show("after", &after);
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode, Failure> {
    let report = report_from_logs(&args.dir).map_err(anyhow::Error::from)?;
    if args.csv {
        report.write_csv(io::stdout().lock()).map_err(anyhow::Error::from)?;
    } else {
        print!("{}", report_table(&report));
    }
    if args.compare {
        print!("\n{}", comparison_table(&report));
    }
    Ok(ExitCode::SUCCESS)
}

fn cases(args: CasesArgs) -> Result<ExitCode, Failure> {
    let p = lookup(&args.problem)?;
    let mut out = io::stdout().lock();
    export_cases(p.name, &p.generate_cases(args.seed), &mut out).map_err(anyhow::Error::from)?;
    out.flush().map_err(anyhow::Error::from)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Compile(a) => compile(a),
        Command::Simplify(a) => simplify_cmd(a),
        Command::Report(a) => report(a),
        Command::Cases(a) => cases(a),
        Command::Builtins => {
            print!("{}", reference_page());
            Ok(ExitCode::SUCCESS)
        }
        Command::Problems => {
            PROBLEM_NAMES.iter().for_each(|p| println!("{p}"));
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::NoProgram) => {
            eprintln!("no program: nothing on the AST stack matches the return type");
            ExitCode::from(EXIT_NO_PROGRAM)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
