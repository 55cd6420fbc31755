use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iterint_cli::commands::{self, Command};
use iterint_cli::config::RunConfig;
use iterint_cli::report::emit_report;
use iterint_cli::CliError;

/// Overrides every other choice of output directory.
const OUTPUT_ENV: &str = "ITERINT_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "iterint", version, about = "Iterated Ito and Stratonovich integrals by multiple Fourier series")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `output` from the config, else `iterint-out`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Run configurations whose convergence is not covered by the theory.
    #[arg(long, global = true)]
    allow_outside_guarantees: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Coefficient tensor with its Bessel and trace report.
    Coeffs,
    /// Sampled Ito and Stratonovich realizations.
    Expand,
    /// Pathwise mean-square error against fine-grid integral sums.
    Verify,
    /// Trace residuals, Δ tables and diagonal constants.
    Diag,
    /// Strong-order study of Euler and Milstein schemes.
    Sde,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let command = match cli.command {
        Sub::Coeffs => Command::Coeffs,
        Sub::Expand => Command::Expand,
        Sub::Verify => Command::Verify,
        Sub::Diag => Command::Diag,
        Sub::Sde => Command::Sde,
    };
    let artifacts = commands::run(command, &cfg, cli.allow_outside_guarantees)?;
    let dir = std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .or(cli.output)
        .or(cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("iterint-out"))
        .join(command.name());
    for line in &artifacts.summary {
        println!("{line}");
    }
    for path in emit_report(&dir, &artifacts)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
