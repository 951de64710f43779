//! Command-line front end.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use config::{Overrides, SweepConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ising-qfi",
    version,
    about = "Fisher information and coupling estimation for transverse-field Ising chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QFI on a grid of (L, J, h, beta).
    QfiScan(CommonArgs),
    /// Field maximizing the QFI for each (L, J, beta).
    OptimalField(CommonArgs),
    /// SLD matrix and its diagnostics at one point (JSON).
    SldDump(CommonArgs),
    /// Magnetization Fisher information against the QFI.
    FisherMag(CommonArgs),
    /// Simulated magnetization experiments with Bayesian estimation of J.
    BayesSim(CommonArgs),
    /// Power-law fit of the QFI in L.
    Scaling(CommonArgs),
}

impl Command {
    pub fn task(&self) -> &'static str {
        match self {
            Command::QfiScan(_) => "qfi-scan",
            Command::OptimalField(_) => "optimal-field",
            Command::SldDump(_) => "sld-dump",
            Command::FisherMag(_) => "fisher-mag",
            Command::BayesSim(_) => "bayes-sim",
            Command::Scaling(_) => "scaling",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::QfiScan(a)
            | Command::OptimalField(a)
            | Command::SldDump(a)
            | Command::FisherMag(a)
            | Command::BayesSim(a)
            | Command::Scaling(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Chain lengths, e.g. `2,4,inf`.
    #[arg(long = "L")]
    pub sizes: Option<String>,
    /// Couplings: `x`, `x,y,...` or `start:stop:step`.
    #[arg(long = "J")]
    pub coupling: Option<String>,
    /// Fields, same forms as `--J`.
    #[arg(long = "h")]
    pub field: Option<String>,
    /// Inverse temperatures; `inf` for the ground state.
    #[arg(long = "beta")]
    pub beta: Option<String>,
    /// Force `exact`, `fermion` or `thermo`.
    #[arg(long)]
    pub backend: Option<String>,
}

impl CommonArgs {
    /// Config file (if any) with the flag overrides applied.
    pub fn resolve(&self, task: &str) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::load(p)?,
            None => SweepConfig::default(),
        };
        cfg.check_task(task)?;
        cfg.apply(&Overrides {
            sizes: self.sizes.clone(),
            coupling: self.coupling.clone(),
            field: self.field.clone(),
            beta: self.beta.clone(),
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            backend: self.backend.clone(),
        })?;
        Ok(cfg)
    }
}

/// Runs one parsed command.
pub fn execute(command: &Command) -> Result<()> {
    let cfg = command.args().resolve(command.task())?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads()? {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?
    };
    pool.install(|| match command {
        Command::QfiScan(_) => commands::qfi_scan(&cfg),
        Command::OptimalField(_) => commands::optimal_field(&cfg),
        Command::SldDump(_) => commands::sld_dump(&cfg),
        Command::FisherMag(_) => commands::fisher_mag(&cfg),
        Command::BayesSim(_) => commands::bayes_sim(&cfg),
        Command::Scaling(_) => commands::scaling(&cfg),
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ising-qfi: {e}");
            e.exit_code()
        }
    }
}
