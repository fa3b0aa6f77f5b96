use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qorder_cli::config::parse_scenario;
use qorder_cli::emit::{emit_report, Format};
use qorder_cli::error::{CliError, Result};
use qorder_cli::sweep::{run_sweep, SweepSpec};
use qorder_cli::{presets, run_scenario, selftest, ScenarioConfig};

#[derive(Parser)]
#[command(name = "qorder", version, about = "Quantum-controlled temporal order scenarios")]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Overrides the seed of stochastic scenarios.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run { config: PathBuf },
    /// Run a built-in preset, or print its configuration.
    Preset {
        name: String,
        #[arg(long)]
        print_config: bool,
    },
    /// Run a scenario over a range of one numeric parameter.
    Sweep {
        config: PathBuf,
        /// JSON pointer or dotted path below `parameters`.
        #[arg(long)]
        param: String,
        /// `start:stop:n`
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long)]
        log: bool,
    },
    /// Run the acceptance suite.
    Selftest,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_scenario(&text)?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn write(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Returns whether everything that ran succeeded.
fn execute(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("--threads", e.to_string()))?;
    }
    match &cli.command {
        Command::Run { config } => {
            let report = run_scenario(&load(config, cli.seed)?)?;
            write(&cli.out, &emit_report(&report.to_value(), cli.format))?;
        }
        Command::Preset { name, print_config } => {
            let cfg = presets::preset(name).ok_or_else(|| {
                CliError::config("/preset", format!("unknown preset `{name}`; available: {}", presets::NAMES.join(", ")))
            })?;
            let cfg = match cli.seed {
                Some(s) => cfg.with_seed(s),
                None => cfg,
            };
            if *print_config {
                write(&cli.out, format!("{}\n", cfg.to_json()).as_bytes())?;
            } else {
                let report = run_scenario(&cfg)?;
                write(&cli.out, &emit_report(&report.to_value(), cli.format))?;
            }
        }
        Command::Sweep {
            config,
            param,
            range,
            log,
        } => {
            let cfg = load(config, cli.seed)?;
            let spec = SweepSpec::new(param, range, *log)?;
            write(&cli.out, &emit_report(&run_sweep(&cfg, &spec)?, cli.format))?;
        }
        Command::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                eprintln!("{}", selftest::line(r));
            }
            write(&cli.out, &emit_report(&selftest::report(&results), cli.format))?;
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qorder: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
