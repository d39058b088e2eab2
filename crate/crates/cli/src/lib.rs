//! `mirl` experiment harness: generate demonstrations on the radar scenario,
//! corrupt them, train single- or multi-intention IRL and the clustering
//! baselines, evaluate checkpoints and run parameter sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{Algorithm, ExperimentConfig, RewardKind};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "mirl", version, about = "Multi-intention inverse RL experiments on a cognitive-radar scenario")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Roll out random and expert policies and write JSONL datasets.
    Generate(Common),
    /// Flip each action of a dataset to a wrong one with probability --aer.
    Corrupt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Train on `generate` output and write a checkpoint plus train.csv.
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory written by `generate`.
        #[arg(long)]
        data: PathBuf,
    },
    /// Print {nmi, ari, evd, ape} for a checkpoint as JSON.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// model.json or a mixture directory.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Trajectories to score; defaults to the training demonstrations.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Train every (axis value, algorithm, seed) cell and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        aer_values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        n_traj_values: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub reward_model: Option<RewardKind>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub aer: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<usize>>,
    #[arg(long)]
    pub n_expert: Option<usize>,
    #[arg(long)]
    pub n_random: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub paper_scale: bool,
    /// Record wall-clock milliseconds in train.csv (breaks byte-identical reruns).
    #[arg(long)]
    pub record_timing: bool,
}

impl Common {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.scenario {
            c.scenario = Some(p.clone());
        }
        if let Some(p) = &self.out {
            c.out = p.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = self.algorithm {
            c.algorithm = a;
        }
        if let Some(r) = self.reward_model {
            c.reward_model = r;
        }
        if self.k.is_some() {
            c.k = self.k;
        }
        if let Some(a) = self.aer {
            c.aer = a;
        }
        if let Some(t) = &self.tasks {
            c.tasks = t.clone();
        }
        if let Some(n) = self.n_expert {
            c.n_expert_trajectories = n;
        }
        if let Some(n) = self.n_random {
            c.n_random_trajectories = n;
        }
        if let Some(n) = self.iters {
            c.irl.n_outer_iters = n;
        }
        c.paper_scale |= self.paper_scale;
        c.record_timing |= self.record_timing;
        c.validate()?;
        Ok(c)
    }

    /// Like [`Common::resolve`], but without `--tasks` or a config file the
    /// tasks come from the data directory's manifest.
    pub fn resolve_for_data(&self, data_dir: &Path) -> CliResult<ExperimentConfig> {
        let mut c = self.resolve()?;
        if self.tasks.is_none() && self.config.is_none() {
            c.tasks = commands::data_tasks(data_dir)?;
            c.validate()?;
        }
        Ok(c)
    }
}

/// Parses arguments and runs one subcommand. Returns what goes to stdout.
pub fn run<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                return Ok(e.to_string())
            }
            _ => return Err(CliError::Validation(e.render().to_string())),
        },
    };
    match cli.command {
        Command::Generate(common) => {
            let config = common.resolve()?;
            let m = commands::cmd_generate(&config)?;
            Ok(format!(
                "wrote {} random and {} expert trajectories to {}\n",
                m.n_random,
                m.n_expert_per_task * m.tasks.len(),
                config.out.display()
            ))
        }
        Command::Corrupt { common, input } => {
            let config = common.resolve()?;
            let out = commands::cmd_corrupt(&config, &input)?;
            Ok(format!("wrote {} trajectories to {}\n", out.len(), config.out.display()))
        }
        Command::Train { common, data } => {
            let config = common.resolve_for_data(&data)?;
            let outcome = commands::cmd_train(&config, &data)?;
            Ok(serde_json::to_string(&outcome.metrics).expect("metrics serialize") + "\n")
        }
        Command::Evaluate {
            common,
            data,
            checkpoint,
            dataset,
        } => {
            let config = common.resolve_for_data(&data)?;
            let metrics = commands::cmd_evaluate(&config, &data, &checkpoint, dataset.as_deref())?;
            Ok(serde_json::to_string(&metrics).expect("metrics serialize") + "\n")
        }
        Command::Sweep {
            common,
            aer_values,
            n_traj_values,
            algorithms,
            seeds,
        } => {
            let mut config = common.resolve()?;
            if let Some(v) = aer_values {
                config.sweep.aer = v;
            }
            if let Some(v) = n_traj_values {
                config.sweep.n_traj = v;
            }
            if let Some(v) = algorithms {
                config.sweep.algorithms = v;
            }
            if let Some(v) = seeds {
                config.sweep.seeds = v;
            }
            let rows = commands::cmd_sweep(&config)?;
            Ok(format!("wrote {} sweep rows to {}\n", rows.len(), config.out.display()))
        }
    }
}
