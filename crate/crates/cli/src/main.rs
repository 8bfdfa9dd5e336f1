use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cubetune_core::backend::{CubeSplit, CuberKind};
use cubetune_core::formula::{parse_dimacs, write_dimacs, write_icnf, Cube, Formula};
use cubetune_core::orchestrate::report::write_csv_tables;
use cubetune_core::orchestrate::{plain_cnc, sdac, Answer, Family, RunConfig, RunError, RunReport};

#[derive(Parser)]
#[command(name = "cubetune", version, about = "Cube-and-conquer SAT solving with online strategy tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve with strategy learning.
    Solve(RunArgs),
    /// Solve with plain cube-and-conquer under the default strategy.
    Cnc(RunArgs),
    /// Partition a formula and print it with its cubes as iCNF.
    Cube(CubeArgs),
    /// Render a run summary as CSV tables.
    TuneReport(ReportArgs),
    /// Print a generated benchmark as DIMACS.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
}

#[derive(Args)]
struct Input {
    /// DIMACS file.
    #[arg(required_unless_present = "stdin", conflicts_with = "stdin")]
    formula: Option<PathBuf>,
    /// Read the formula from standard input.
    #[arg(long)]
    stdin: bool,
}

impl Input {
    fn read(&self) -> Result<Formula> {
        let mut text = String::new();
        match &self.formula {
            Some(path) => {
                File::open(path)
                    .with_context(|| format!("cannot open {}", path.display()))?
                    .read_to_string(&mut text)?;
            }
            None => {
                io::stdin().read_to_string(&mut text)?;
            }
        }
        parse_dimacs(text.as_bytes()).context("cannot parse formula")
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: Input,
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the run summary as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the line-delimited event log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write CSV scatter tables into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        if self.report.is_some() {
            cfg.report.summary.clone_from(&self.report);
        }
        if self.log.is_some() {
            cfg.report.log.clone_from(&self.log);
        }
        if self.csv_dir.is_some() {
            cfg.report.csv_dir.clone_from(&self.csv_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CuberArg {
    Lookahead,
    UnitClause,
}

#[derive(Args)]
struct CubeArgs {
    #[command(flatten)]
    input: Input,
    /// At most 2^depth cubes.
    #[arg(long, default_value_t = 6)]
    depth: u32,
    #[arg(long, value_enum, default_value = "lookahead")]
    cuber: CuberArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Summary JSON of a run.
    report: PathBuf,
    /// Summary JSON of a baseline run, for the common-cube table.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenFamily {
    /// Pigeonhole: P pigeons into H holes.
    Php { pigeons: usize, holes: usize },
    /// Two XOR chains over the same inputs, asserted to differ.
    XorMiter {
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Uniform random 3-CNF.
    Random3cnf {
        vars: usize,
        clauses: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_answer(out: &mut impl Write, answer: &Answer) -> io::Result<ExitCode> {
    match answer {
        Answer::Unsat => {
            writeln!(out, "s UNSATISFIABLE")?;
            Ok(ExitCode::from(20))
        }
        Answer::Sat { model } => {
            writeln!(out, "s SATISFIABLE")?;
            for chunk in model.chunks(10) {
                let line: Vec<String> = chunk.iter().map(i32::to_string).collect();
                writeln!(out, "v {}", line.join(" "))?;
            }
            writeln!(out, "v 0")?;
            Ok(ExitCode::from(10))
        }
    }
}

fn summarize(report: &RunReport) {
    if let Some(learned) = &report.learned {
        log::info!("learned strategy: {learned}");
    }
    if let Some(v) = &report.validation {
        log::info!(
            "validation: learned {} vs default {} ({})",
            v.cost_learned,
            v.cost_default,
            if v.accepted { "accepted" } else { "rejected" }
        );
    }
    let t = &report.timings;
    log::info!(
        "cubes {} | cubing {:.3}s learning {:.3}s solving {:.3}s total {:.3}s",
        report.initial_cubes,
        t.cubing_s,
        t.learning_s,
        t.solving_s,
        t.total_s
    );
}

fn run(args: &RunArgs, tuned: bool) -> Result<ExitCode> {
    let formula = args.input.read()?;
    let cfg = args.config()?;
    let result = if tuned { sdac(&formula, &cfg) } else { plain_cnc(&formula, &cfg) };
    let report = match result {
        Ok(report) => report,
        Err(RunError::Aborted { partial, source }) => {
            summarize(&partial);
            return Err(anyhow::Error::new(*source).context("run aborted"));
        }
        Err(e) => return Err(e.into()),
    };
    summarize(&report);
    let Some(answer) = &report.answer else { bail!("run finished without an answer") };
    Ok(print_answer(&mut io::stdout().lock(), answer)?)
}

fn cube(args: &CubeArgs) -> Result<ExitCode> {
    if args.depth > 30 {
        bail!("depth must be at most 30");
    }
    let formula = args.input.read()?;
    let kind = match args.cuber {
        CuberArg::Lookahead => CuberKind::Lookahead,
        CuberArg::UnitClause => CuberKind::UnitClause,
    };
    let cubes = match kind.build().cube(&formula, &Cube::top(), 1usize << args.depth, args.seed)? {
        CubeSplit::Cubes(cubes) => cubes,
        CubeSplit::Refuted => {
            log::info!("formula refuted while cubing");
            Vec::new()
        }
        CubeSplit::Satisfied(_) => {
            log::info!("formula satisfied while cubing");
            vec![Cube::top()]
        }
    };
    io::stdout().lock().write_all(write_icnf(&formula, &cubes).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn load_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    RunReport::from_json(&text).with_context(|| format!("{} is not a run summary", path.display()))
}

fn tune_report(args: &ReportArgs) -> Result<ExitCode> {
    let report = load_report(&args.report)?;
    let baseline = args.baseline.as_deref().map(load_report).transpose()?;
    for name in write_csv_tables(&args.out, &report, baseline.as_ref())? {
        println!("{}", args.out.join(name).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn gen(family: &GenFamily) -> Result<ExitCode> {
    let family = match *family {
        GenFamily::Php { pigeons, holes } => Family::Php { pigeons, holes },
        GenFamily::XorMiter { width, seed } => Family::XorMiter { width, seed },
        GenFamily::Random3cnf { vars, clauses, seed } => Family::Random3Cnf { vars, clauses, seed },
    };
    if !family.is_valid() {
        bail!("benchmark parameters must be positive");
    }
    io::stdout().lock().write_all(write_dimacs(&family.generate()).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run(args, true),
        Command::Cnc(args) => run(args, false),
        Command::Cube(args) => cube(args),
        Command::TuneReport(args) => tune_report(args),
        Command::Gen { family } => gen(family),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
