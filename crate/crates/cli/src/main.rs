//! `ricci-forge`: verification and search runs over the core library.
//!
//! Exit status: 0 when every check passes, 2 when a check fails, 3 for usage
//! or input errors, 4 for numeric or domain errors.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, Ctx};
use report::{Format, Report};
use ricci_forge::parallel::Mode;

#[derive(Parser, Debug)]
#[command(name = "ricci-forge", version, about = "Warped-product and bundle Ricci curvature checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized sample points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run sweeps on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frame Ricci of a named chart metric against its known value.
    OracleCheck(commands::OracleCheckArgs),
    /// Closed-form Ricci blocks of a warped family.
    WarpedEval(commands::WarpedEvalArgs),
    /// Closed-form blocks against the chart oracle.
    WarpedVerify(commands::WarpedVerifyArgs),
    /// Boundary conditions at r = 0 for closing up smoothly.
    Smoothness(commands::SmoothnessArgs),
    /// Canonical variation Ricci blocks.
    VariationEval(commands::VariationEvalArgs),
    /// Error inequalities of a canonical variation.
    ErrorBounds(commands::ErrorBoundsArgs),
    /// Smallest p giving positive Ricci on the grid.
    Minp(commands::MinpArgs),
    /// Explicit sufficient p threshold.
    Kbound(commands::KboundArgs),
    /// Evaluate a bundle plan to a certificate and p bound.
    Plan(commands::PlanArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("RICCI_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("RICCI_FORGE_THREADS must be a positive integer, got {v:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let ctx = Ctx {
        seed: cli.seed,
        mode: if cli.sequential { Mode::Sequential } else { Mode::Parallel },
    };
    match &cli.command {
        Command::OracleCheck(a) => commands::oracle_check(a, &ctx),
        Command::WarpedEval(a) => commands::warped_eval(a, &ctx),
        Command::WarpedVerify(a) => commands::warped_verify(a, &ctx),
        Command::Smoothness(a) => commands::smoothness(a, &ctx),
        Command::VariationEval(a) => commands::variation_eval(a, &ctx),
        Command::ErrorBounds(a) => commands::error_bounds(a, &ctx),
        Command::Minp(a) => commands::minp(a, &ctx),
        Command::Kbound(a) => commands::kbound(a, &ctx),
        Command::Plan(a) => commands::plan(a, &ctx),
    }
}

fn run() -> Result<u8, CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(0);
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.strip_prefix("error: ").unwrap_or(&text);
            return Err(CliError::Usage(text.trim_end().to_string()));
        }
    };
    configure_threads()?;
    let report = dispatch(&cli)?;
    let format = if cli.json { Format::Json } else { cli.format };
    let text = report.render(format);
    if let Some(path) = &cli.out {
        std::fs::write(path, &text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    Ok(if report.pass() { 0 } else { 2 })
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code() as u8)
        }
    }
}
