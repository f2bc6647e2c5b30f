use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cpdetect_cli::{emit_report, parse_experiment, read_csv, write_rejection_table, ReportFormat};
use cpdetect_core::{
    run_experiment, run_test, BuiltinStatistic, DivisorMode, EllChoice, Functional, SerialModel,
    SmoothingParams, TestConfig, TestVariant,
};

/// Tests for a change in cross-sectional dependence.
#[derive(Parser)]
#[command(name = "cpdetect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one test on a CSV file of observations (rows = time).
    Test(TestArgs),
    /// Estimate rejection rates over an experiment grid.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Treat the first line as column names (default: detect).
    #[arg(long, conflicts_with = "no_header")]
    header: bool,
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value = "rho1")]
    stat: BuiltinStatistic,
    /// boot-iid, boot-dep, asymptotic or asymptotic-hac.
    #[arg(long, default_value = "boot-iid")]
    method: TestVariant,
    /// Variance form of the asymptotic test: iid or dependent.
    #[arg(long, default_value = "iid")]
    serial: SerialModel,
    #[arg(long, default_value_t = cpdetect_core::procedure::DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value = "auto")]
    ell: EllChoice,
    #[arg(long, default_value_t = 0.51)]
    bn_exponent: f64,
    #[arg(long, default_value = "simulation")]
    divisor: DivisorMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the repetitions of every cell.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let header = match (args.header, args.no_header) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    };
    let sample = read_csv(&args.input, header)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let f = Functional::builtin(args.stat, sample.d())?;
    let serial = match args.method.serial {
        SerialModel::Dependent => SerialModel::Dependent,
        SerialModel::Iid => args.serial,
    };
    let config = TestConfig {
        method: args.method.method,
        serial,
        replicates: args.replicates,
        ell: args.ell,
        smoothing: SmoothingParams::new(args.bn_exponent)?,
        divisor: args.divisor,
        seed: args.seed,
    };
    let report = run_test(&sample, &f, &config)?;
    write_out(args.output.as_ref(), &emit_report(&report, args.format))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut grid = parse_experiment(&text).with_context(|| format!("in {}", args.config.display()))?;
    for (i, cell) in grid.cells.iter_mut().enumerate() {
        if let Some(r) = args.reps {
            cell.reps = r;
        }
        for w in cell.dgp()?.validate()? {
            eprintln!("warning: cell {}: {w}", i + 1);
        }
    }
    let rows = run_experiment(&grid, args.threads, args.seed)?;
    let mut buf = Vec::new();
    write_rejection_table(&rows, &mut buf)?;
    write_out(args.out.as_ref(), &buf)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
