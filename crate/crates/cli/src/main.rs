//! `iqcrate`: batch front end for rate certificates, sweeps, simulations and audits.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver inconclusive,
//! 4 simulation failure.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, GraphArgs};
use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Inconclusive(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Inconclusive(_) => 3,
            CliError::Simulation(_) => 4,
        }
    }
}

impl From<iqcrate::Error> for CliError {
    fn from(e: iqcrate::Error) -> Self {
        match e {
            iqcrate::Error::Simulation { .. } => CliError::Simulation(e.to_string()),
            iqcrate::Error::Solver(_) => CliError::Inconclusive(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "iqcrate", version, about = "Convergence-rate certificates for gradient-driven feedback loops")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for random fields and initial states (overrides `run.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write the SDP problems in SDPA sparse format.
    #[arg(long, global = true)]
    dump_sdpa: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Best certified rate per multiplier class at the scenario's sector.
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certified rates over `run.l_grid`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-loop trajectory and empirical rate.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sector constants of a networked potential.
    GraphBounds {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Edge-list file.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        m_psi: Option<f64>,
        #[arg(long)]
        l_psi: Option<f64>,
        /// Bound over every extension of the graph with this maximum degree.
        #[arg(long)]
        d_max: Option<usize>,
    },
    /// Audits a certificate's multiplier inequality on a simulated trajectory.
    IqcVerify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let ctx = Ctx {
        out: cli.out,
        seed: cli.seed,
        dump_sdpa: cli.dump_sdpa,
    };
    match cli.command {
        Command::Certify { config } => commands::certify(&Scenario::load(&config)?, &ctx),
        Command::Sweep { config } => commands::sweep(&Scenario::load(&config)?, &ctx),
        Command::Simulate { config } => commands::simulate(&Scenario::load(&config)?, &ctx),
        Command::GraphBounds {
            config,
            graph,
            m_psi,
            l_psi,
            d_max,
        } => {
            let s = config.as_deref().map(Scenario::load).transpose()?;
            commands::graph_bounds(s.as_ref(), &GraphArgs { graph, m_psi, l_psi, d_max }, &ctx)
        }
        Command::IqcVerify { config, certificate } => {
            commands::iqc_verify(&Scenario::load(&config)?, &certificate, &ctx)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
