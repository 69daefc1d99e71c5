use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ergobound::commands::{self, Outcome, RunOptions};
use ergobound::config::ExperimentConfig;

/// Upper bounds on long-time averages in polynomial ODEs.
#[derive(Parser)]
#[command(name = "ergobound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the bound SDP for each degree and write certificates.
    Bound(Common),
    /// Converge periodic orbits by shooting and tabulate their averages.
    Orbit(Common),
    /// Sample sublevel sets of the residual on a grid.
    Region(Common),
    /// Residual traces and gap reports along stored orbits.
    Trace(Common),
    /// Re-validate certificate files.
    Verify {
        #[arg(required = true)]
        certificates: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Auxiliary degree; repeat to give several. Overrides the config.
    #[arg(long = "degree")]
    degrees: Vec<u32>,
    /// Worker threads for concurrent bound solves and grid evaluation.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Common {
    fn load(&self) -> anyhow::Result<(ExperimentConfig, RunOptions)> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if !self.degrees.is_empty() {
            cfg.override_degrees(&self.degrees)?;
        }
        if self.jobs == 0 {
            anyhow::bail!("--jobs must be at least 1");
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.clone());
        Ok((cfg, RunOptions { out, jobs: self.jobs }))
    }
}

fn report(outcome: &Outcome) {
    for l in &outcome.lines {
        println!("{}", l);
    }
    for w in &outcome.warnings {
        eprintln!("warning: {}", w);
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let outcome = match cli.command {
        Command::Verify { certificates } => {
            let mut ok = true;
            for path in certificates {
                let o = commands::run_verify(&path).with_context(|| format!("verifying {}", path.display()))?;
                println!("{}", path.display());
                report(&o);
                ok &= o.ok;
            }
            return Ok(ok);
        }
        Command::Bound(c) => {
            let (cfg, r) = c.load()?;
            commands::run_bound(&cfg, &r)?
        }
        Command::Orbit(c) => {
            let (cfg, r) = c.load()?;
            commands::run_orbit(&cfg, &r)?
        }
        Command::Region(c) => {
            let (cfg, r) = c.load()?;
            commands::run_region(&cfg, &r)?
        }
        Command::Trace(c) => {
            let (cfg, r) = c.load()?;
            commands::run_trace(&cfg, &r)?
        }
    };
    report(&outcome);
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
