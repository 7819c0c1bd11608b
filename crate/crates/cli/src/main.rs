use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stmhd_cli::sweep::all_converged;
use stmhd_cli::{emit_csv, exit, run_sweep, write_csv, CliError, ExperimentConfig};
use stmhd_core::solver::NewtonConfig;
use stmhd_core::verify;

/// Space-time Newton-Krylov solver for 2D incompressible resistive MHD.
#[derive(Parser)]
#[command(name = "stmhd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (dx, dt, T) sweep and write a CSV table.
    Run(RunArgs),
    /// Run the built-in oracle checks.
    Verify {
        /// Also run the iteration-count scaling sweeps (slow).
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// tearing | island
    #[arg(long)]
    problem: Option<String>,
    /// Mesh spacings, e.g. "2^-2,2^-3".
    #[arg(long)]
    dx: Option<String>,
    /// Time steps.
    #[arg(long)]
    dt: Option<String>,
    /// Final times.
    #[arg(long = "T")]
    t_final: Option<String>,
    /// spacetime | sequential | both
    #[arg(long)]
    mode: Option<String>,
    /// PT | P | Ptilde
    #[arg(long)]
    precond: Option<String>,
    /// CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock seconds per solve.
    #[arg(long)]
    timings: bool,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let overrides = [
        ("problem", &args.problem),
        ("dx", &args.dx),
        ("dt", &args.dt),
        ("T", &args.t_final),
        ("mode", &args.mode),
        ("precond", &args.precond),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.timings |= args.timings;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<i32, CliError> {
    let cfg = load(args)?;
    let rows = run_sweep(&cfg)?;
    match &cfg.out {
        Some(path) => write_csv(&rows, path)?,
        None => emit_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(if all_converged(&rows) { exit::SUCCESS } else { exit::NOT_CONVERGED })
}

fn verify(full: bool) -> Result<i32, stmhd_core::Error> {
    let mut checks = verify::battery()?;
    if full {
        checks.extend(verify::scaling(&NewtonConfig::default())?);
    }
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed == 0 { exit::SUCCESS } else { exit::NOT_CONVERGED })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { exit::SUCCESS as u8 });
        }
    };
    let code = match cli.command {
        Command::Run(args) => run(&args).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            exit::CONFIG
        }),
        Command::Verify { full } => verify(full).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            exit::CONFIG
        }),
    };
    ExitCode::from(code as u8)
}
