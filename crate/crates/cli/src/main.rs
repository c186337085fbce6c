use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use resonant_cli::commands::{self, Context, Outcome};
use resonant_cli::error::{CliError, Result};
use resonant_cli::scenario::{RunSpec, Scenario};
use resonant_core::linop::Precision;

#[derive(Debug, Parser)]
#[command(name = "resonant", version, about = "Periodic solutions of completely resonant wave equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Debug, Subcommand)]
enum Command {
    Solve(ScenarioArg),
    Scan(ScenarioArg),
    Eig(ScenarioArg),
    Audit(ScenarioArg),
    Parity(ScenarioArg),
    /// Runs the acceptance suite.
    Verify,
}

#[derive(Debug, clap::Args)]
struct ScenarioArg {
    #[arg(long)]
    scenario: PathBuf,
}

fn expect_kind(s: &Scenario, cmd: &str) -> Result<()> {
    let kind = match s.run {
        RunSpec::Solve { .. } => "solve",
        RunSpec::Scan { .. } => "scan",
        RunSpec::Eig { .. } => "eig",
        RunSpec::Audit { .. } => "audit",
        RunSpec::Parity { .. } => "parity",
    };
    if kind == cmd {
        Ok(())
    } else {
        Err(CliError::schema("run.kind", format!("scenario is `{kind}` but the command is `{cmd}`")))
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::schema("--threads", e.to_string()))?;
    }
    let precision = cli.precision.map(|p| match p {
        PrecisionArg::Double => Precision::Double,
        PrecisionArg::Extended => Precision::Extended,
    });
    let (arg, cmd) = match &cli.command {
        Command::Verify => {
            let ctx = Context {
                out: cli.out.unwrap_or_else(|| PathBuf::from("out")),
                seed: cli.seed.unwrap_or(0),
                precision,
            };
            let (outcome, report) = commands::verify(&ctx)?;
            for c in &report.criteria {
                println!("{} {:>2} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.summary);
            }
            return Ok(outcome);
        }
        Command::Solve(a) => (a, "solve"),
        Command::Scan(a) => (a, "scan"),
        Command::Eig(a) => (a, "eig"),
        Command::Audit(a) => (a, "audit"),
        Command::Parity(a) => (a, "parity"),
    };
    let mut scenario = Scenario::load(&arg.scenario)?;
    expect_kind(&scenario, cmd)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    let ctx = Context {
        out: cli.out.or_else(|| scenario.output.clone()).unwrap_or_else(|| PathBuf::from("out")),
        seed: scenario.seed,
        precision,
    };
    commands::run_scenario(&scenario, &ctx)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.artifacts.files {
                println!("wrote {}", f.display());
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
