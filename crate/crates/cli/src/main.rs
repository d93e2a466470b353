use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use otdr_cli::{apply_overrides, execute, load_config, write_artifacts, Command, Overrides, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "otdr", version, about = "Back-scatter channel exponents, rate regions and Monte-Carlo checks")]
struct Cli {
    /// Scenario file (TOML); the built-in Figure 3 scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for sampling, overriding `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sampling threads, overriding `mc.workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Impulse responses, difference taps and their autocorrelation.
    Coeffs,
    /// Eigenvalues of G_n and Szegő averages.
    Spectrum,
    /// Corner points and boundaries of the rate/exponent regions, plus a plot script.
    Region,
    /// Sampling estimates against their closed forms.
    Mc,
    /// Every invariant as pass/fail; exits 2 on any failure.
    Verify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Coeffs => Command::Coeffs,
            Sub::Spectrum => Command::Spectrum,
            Sub::Region => Command::Region,
            Sub::Mc => Command::Mc,
            Sub::Verify => Command::Verify,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let overrides = Overrides { out: cli.out, seed: cli.seed, workers: cli.workers };
    let run = || -> otdr_cli::error::Result<u8> {
        let mut config = load_config(cli.config.as_deref())?;
        apply_overrides(&mut config, &overrides)?;
        let outcome = execute(command, &config)?;
        let written = write_artifacts(&config.output_directory, &outcome.artifacts)?;
        if !cli.quiet {
            for path in &written {
                eprintln!("wrote {}", path.display());
            }
        }
        if outcome.verified == Some(false) {
            eprintln!("verify: invariant failures, see verify.csv");
        }
        Ok(outcome.exit_code())
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("otdr {}: {e}", command.name());
            ExitCode::from(EXIT_INVALID)
        }
    }
}
