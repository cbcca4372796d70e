//! Command-line front end: bounds, certificates, trajectories and tables.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "sosbound", version, about = "Sum-of-squares bounds on time averages of the Lorenz system")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SystemArgs {
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long, global = true)]
    pub sigma: Option<String>,
    /// A number, `r` (symbolic) or `rho` (symbolic r - 1).
    #[arg(long, global = true)]
    pub r: Option<String>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve the SOS program for one moment and enclose the optimum.
    Bound {
        #[arg(long)]
        moment: Option<String>,
        #[arg(long)]
        degree: Option<u32>,
        /// upper or lower
        #[arg(long)]
        sense: Option<String>,
        /// State scale applied before solving.
        #[arg(long)]
        scale: Option<String>,
        /// Skip the rational enclosure.
        #[arg(long)]
        no_certify: bool,
        /// Write the verified certificate here.
        #[arg(long)]
        certificate_out: Option<PathBuf>,
    },
    /// Build and verify a built-in analytic certificate (z2, z3, xy3).
    Certify {
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        certificate_out: Option<PathBuf>,
    },
    /// Re-verify a certificate file in exact arithmetic, without the solver.
    Verify { file: Option<PathBuf> },
    /// Long-time means of the eighteen symmetric moments along one trajectory.
    Average {
        #[arg(long)]
        t_total: Option<f64>,
        #[arg(long)]
        t_transient: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Initial state as `x,y,z`.
        #[arg(long)]
        initial: Option<String>,
    },
    /// Find a periodic orbit by its symbol sequence and average over it.
    Orbit {
        #[arg(long)]
        symbols: Option<String>,
        /// Write the sampled orbit as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// The relation table between symmetric moment averages.
    Relations,
    /// Admissible (beta, sigma) for the cubic certificate, on a grid.
    Region {
        /// Comma-separated sigma values.
        #[arg(long, default_value = "1,10,100")]
        sigmas: String,
        /// Comma-separated beta values.
        #[arg(long, default_value = "0.04,0.05,0.1,1,8/3")]
        betas: String,
        /// json or csv
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Summary table: chaotic means, largest known means and best bounds.
    Report {
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long)]
        t_total: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let command = match (cli.command, cfg.task.as_deref()) {
        (Some(c), _) => c,
        (None, Some(task)) => commands::default_command(task)?,
        (None, None) => anyhow::bail!("no subcommand given and the config names no task"),
    };
    let output = cli.output.or_else(|| cfg.output.clone());
    if let Some(task) = &cfg.task {
        cfg.require(task)?;
    }
    let outcome = commands::execute(&command, &cli.system, &cfg)?;
    let text = match outcome.raw {
        Some(raw) => raw,
        None => serde_json::to_string_pretty(&outcome.report)? + "\n",
    };
    match output {
        Some(path) => std::fs::write(&path, text)?,
        None => print!("{text}"),
    }
    Ok(outcome.passed)
}
