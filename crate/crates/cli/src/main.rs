mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Format, ReturnKind, RunConfig};

/// Staking-economy equilibria, sweeps and simulations.
#[derive(Parser, Debug)]
#[command(name = "posmacro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (default: the config `path` key, else standard output).
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Forces deterministic returns equal to mu_r.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Overrides the config horizon.
    #[arg(long, global = true)]
    steps: Option<u64>,

    /// No diagnostics on standard error.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Pure-investor equilibrium at W = total_supply.
    SolveHomogeneous,
    /// Two-class equilibrium at t = 0.
    SolveHeterogeneous,
    /// Wealth and stake trajectory.
    Simulate,
    /// Log-spaced wealth sweep with a fitted scaling exponent.
    SweepWealth,
    /// Sweep of delta = mu_r - sigma_r^2 with sensitivities.
    SweepDelta,
    /// Monte Carlo ensemble of simulations.
    Ensemble,
}

enum Failure {
    Config(String),
    Solver(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Io(m) => m,
        }
    }
}

impl From<posmacro::Error> for Failure {
    fn from(e: posmacro::Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = config::parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(f) = &cli.format {
        cfg.format = f.parse::<Format>().map_err(Failure::Config)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = cli.steps {
        if steps == 0 {
            return Err(Failure::Config("--steps must be at least 1".into()));
        }
        cfg.horizon = steps;
    }
    if cli.deterministic {
        cfg.return_model = ReturnKind::Deterministic;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let report = match cli.command {
        Command::SolveHomogeneous => commands::solve_homogeneous(&cfg),
        Command::SolveHeterogeneous => commands::solve_heterogeneous(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::SweepWealth => commands::sweep_wealth(&cfg),
        Command::SweepDelta => commands::sweep_delta(&cfg),
        Command::Ensemble => commands::ensemble(&cfg),
    }?;
    let text = report.render(cfg.format, cfg.precision);

    let dest = cli.output.clone().or_else(|| cfg.path.as_ref().map(PathBuf::from));
    match &dest {
        Some(p) => std::fs::write(p, &text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
        }
    }
    if !cli.quiet {
        let target = dest.map_or_else(|| "standard output".to_string(), |p| p.display().to_string());
        eprintln!("posmacro: {} rows written to {target}", report.rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("posmacro: error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
