use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use openmem::config::{parse_config, Format, RunConfig};
use openmem::error::CliError;
use openmem::run::{run_with_threads, Command, Outcome};

#[derive(Parser)]
#[command(name = "openmem", version, about = "Exact reduced dynamics of a system coupled to a finite environment")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// Worker threads for frequency-node evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check the projected-resolvent identities against the full resolvent.
    Verify,
    /// Reduced dynamics by contour inversion, compared against exact propagation.
    Evolve,
    /// rho(omega + i eps) along a line parallel to the real axis.
    FreqSweep,
    /// Eigenvalues and left/right modes of the effective Liouville.
    Spectrum,
    /// Long-time state from the zero-mode formula, extrapolation and exact oracles.
    Longtime,
    /// Relaxation and memory timescale estimates.
    Diagnose,
    /// List the built-in models.
    Catalog,
}

#[derive(ValueEnum, Clone, Copy)]
enum OutFormat {
    Record,
    Table,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                other => other,
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
        cfg.validate()?;
    }
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be >= 1".into()));
    }
    Ok(cfg)
}

fn render(out: &Outcome, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Record => Ok(out.record.to_json().into_bytes()),
        Format::Table => {
            let mut buf = Vec::new();
            out.table.write_csv(&mut buf)?;
            Ok(buf)
        }
    }
}

fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    let cfg = load(cli)?;
    let cmd = match cli.command {
        Cmd::Verify => Command::Verify,
        Cmd::Evolve => Command::Evolve,
        Cmd::FreqSweep => Command::FreqSweep,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Longtime => Command::Longtime,
        Cmd::Diagnose => Command::Diagnose,
        Cmd::Catalog => Command::Catalog,
    };
    let outcome = run_with_threads(cmd, &cfg, cli.threads)?;
    let format = match cli.format {
        Some(OutFormat::Record) => Format::Record,
        Some(OutFormat::Table) => Format::Table,
        None => cfg.output.format.unwrap_or(Format::Record),
    };
    let bytes = render(&outcome, format)?;
    let path = cli.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    match path {
        Some(p) => fs::write(&p, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(outcome.violation)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(v)) => {
            let e = CliError::Threshold(v);
            eprintln!("openmem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("openmem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
