//! Seeded Monte Carlo sweeps over `M` and strategies, plus CSV I/O.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelKind, ChannelModel};
use crate::engine::{run_lifetime, EngineError, OnInfeasible, RunParams};
use crate::generator::{generate_subsets_with, GenerationError};
use crate::graph::{build_subset_graph, ldip_partition, TieBreak};
use crate::model::{new_swarm, ModelError};
use crate::seed::{self, Stream};
use crate::strategy::StrategyKind;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("M = {m}, trial {trial}: {source}")]
    Generation {
        m: usize,
        trial: usize,
        source: GenerationError,
    },
    #[error("M = {m}, trial {trial}, {strategy}: {source}")]
    Engine {
        m: usize,
        trial: usize,
        strategy: StrategyKind,
        source: EngineError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub snr_db: f64,
    /// Defaults to the capacity at `snr_db`, making the reference power
    /// equal to the linear SNR.
    pub rate_target: Option<f64>,
    /// Power cap as a multiple of the reference power.
    pub cap_multiplier: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            kind: ChannelKind::Awgn,
            snr_db: 10.0,
            rate_target: None,
            cap_multiplier: 3.0,
        }
    }
}

impl ChannelConfig {
    pub fn model(&self) -> Result<ChannelModel, ChannelError> {
        let snr = 10f64.powf(self.snr_db / 10.0);
        match self.rate_target {
            Some(rate) => ChannelModel::new(self.kind, snr, rate),
            None => ChannelModel::at_reference(self.kind, snr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Initial energy per robot; defaults to `reference_transmissions` full
    /// tasks at the reference power.
    pub initial: Option<f64>,
    pub reference_transmissions: u32,
    pub eps_task: f64,
    pub eps_coding: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            initial: None,
            reference_transmissions: 200,
            eps_task: 0.0,
            eps_coding: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakMode {
    #[default]
    Random,
    Lowest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Label written to the `experiment` column.
    pub experiment: String,
    pub n_robots: usize,
    pub k_min: usize,
    pub m_subsets: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub channel: ChannelConfig,
    pub energy: EnergyConfig,
    pub t_c: f64,
    pub strategies: Vec<StrategyKind>,
    pub on_infeasible: OnInfeasible,
    pub tie_break: TieBreakMode,
    pub max_tasks: Option<u64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: "lifetime".into(),
            n_robots: 30,
            k_min: 8,
            m_subsets: vec![4, 5, 6, 7, 8],
            trials: 500,
            master_seed: 2020,
            channel: ChannelConfig::default(),
            energy: EnergyConfig::default(),
            t_c: 1.0,
            strategies: StrategyKind::ALL.to_vec(),
            on_infeasible: OnInfeasible::Terminate,
            tie_break: TieBreakMode::Random,
            max_tasks: None,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.m_subsets.is_empty() {
            return bad("m_subsets must not be empty".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies must not be empty".into());
        }
        if let Some(&m) = self
            .m_subsets
            .iter()
            .find(|&&m| m * self.k_min < self.n_robots)
        {
            return bad(format!(
                "M = {m} cannot cover {} robots with K = {}",
                self.n_robots, self.k_min
            ));
        }
        if self.k_min == 0 || self.k_min > self.n_robots {
            return bad(format!("k_min = {} must lie in 1..=n_robots", self.k_min));
        }
        if !(self.t_c.is_finite() && self.t_c > 0.0) {
            return bad(format!("t_c = {} must be positive", self.t_c));
        }
        if !(self.channel.cap_multiplier.is_finite() && self.channel.cap_multiplier > 0.0) {
            return bad(format!("cap_multiplier = {}", self.channel.cap_multiplier));
        }
        self.channel.model()?;
        Ok(())
    }

    pub fn model(&self) -> Result<ChannelModel, ChannelError> {
        self.channel.model()
    }

    pub fn power_cap(&self) -> Result<f64, ChannelError> {
        Ok(self.channel.cap_multiplier * self.model()?.reference_power())
    }

    pub fn initial_energy(&self) -> Result<f64, ChannelError> {
        Ok(match self.energy.initial {
            Some(e) => e,
            None => {
                let per_task = self.model()?.reference_power() * self.t_c
                    + self.energy.eps_coding
                    + self.energy.eps_task;
                f64::from(self.energy.reference_transmissions) * per_task
            }
        })
    }
}

/// One strategy in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub experiment: String,
    pub channel: ChannelKind,
    pub m: usize,
    pub strategy: StrategyKind,
    pub trial: usize,
    pub lifetime: u64,
    pub skipped: u64,
    pub termination: &'static str,
    /// Number of LDIP subgraphs in this trial.
    pub partition_size: usize,
    /// Worst per-robot energy bookkeeping gap of the run.
    pub conservation_error: f64,
}

/// Per-trial CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub experiment: String,
    pub channel: ChannelKind,
    #[serde(rename = "M")]
    pub m: usize,
    pub strategy: StrategyKind,
    pub trial: usize,
    pub lifetime: u64,
    pub termination: String,
}

impl From<&TrialResult> for TrialRow {
    fn from(r: &TrialResult) -> Self {
        TrialRow {
            experiment: r.experiment.clone(),
            channel: r.channel,
            m: r.m,
            strategy: r.strategy,
            trial: r.trial,
            lifetime: r.lifetime,
            termination: r.termination.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub channel: ChannelKind,
    #[serde(rename = "M")]
    pub m: usize,
    pub strategy: StrategyKind,
    pub mean_lifetime: f64,
    pub sd: f64,
    pub trials: usize,
}

fn run_trial(cfg: &RunConfig, m: usize, trial: usize) -> Result<Vec<TrialResult>, ExperimentError> {
    let model = cfg.model()?;
    let ts = seed::trial_seed(cfg.master_seed, m, trial);
    let sys = generate_subsets_with(
        cfg.n_robots,
        m,
        cfg.k_min,
        &mut seed::rng(seed::stream_seed(ts, Stream::Subsets)),
    )
    .map_err(|source| ExperimentError::Generation { m, trial, source })?;
    let graph = build_subset_graph(&sys);
    let tie = match cfg.tie_break {
        TieBreakMode::Random => TieBreak::Random(seed::stream_seed(ts, Stream::Partition)),
        TieBreakMode::Lowest => TieBreak::LowestIndex,
    };
    let partition = ldip_partition(&graph, tie);
    let swarm = new_swarm(
        cfg.n_robots,
        cfg.initial_energy()?,
        cfg.energy.eps_task,
        cfg.energy.eps_coding,
        cfg.power_cap()?,
    )?;
    cfg.strategies
        .iter()
        .map(|&strategy| {
            let params = RunParams {
                strategy,
                model: model.clone(),
                t_c: cfg.t_c,
                channel_seed: seed::stream_seed(ts, Stream::Channel),
                max_tasks: cfg.max_tasks,
                on_infeasible: cfg.on_infeasible,
            };
            let rec = run_lifetime(&sys, Some(&partition), &swarm, &params).map_err(|source| {
                ExperimentError::Engine {
                    m,
                    trial,
                    strategy,
                    source,
                }
            })?;
            Ok(TrialResult {
                experiment: cfg.experiment.clone(),
                channel: model.kind,
                m,
                strategy,
                trial,
                lifetime: rec.lifetime,
                skipped: rec.skipped,
                termination: rec.termination.as_str(),
                partition_size: partition.len(),
                conservation_error: rec.final_state.conservation_error(),
            })
        })
        .collect()
}

/// Runs every `(M, trial)` pair in parallel. Results come back sorted by
/// `(M, strategy, trial)` whatever the scheduling.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<TrialResult>, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .m_subsets
        .iter()
        .flat_map(|&m| (0..cfg.trials).map(move |t| (m, t)))
        .collect();
    let mut results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(m, t)| run_trial(cfg, m, t))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    results.sort_by_key(|r| (r.m, r.strategy, r.trial));
    Ok(results)
}

/// Mean and sample standard deviation per `(channel, M, strategy)`. Groups
/// without rows are simply absent.
pub fn summarize<'a>(rows: impl IntoIterator<Item = &'a TrialRow>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(ChannelKind, usize, StrategyKind), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.channel, r.m, r.strategy))
            .or_default()
            .push(r.lifetime as f64);
    }
    groups
        .into_iter()
        .map(|((channel, m, strategy), xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                channel,
                m,
                strategy,
                mean_lifetime: mean,
                sd,
                trials: n,
            }
        })
        .collect()
}

pub fn trial_rows(results: &[TrialResult]) -> Vec<TrialRow> {
    results.iter().map(TrialRow::from).collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trial_rows<R: Read>(input: R) -> Result<Vec<TrialRow>, ExperimentError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<TrialRow>, _>>()
        .map_err(Into::into)
}

/// Writes `trials.csv` and `summary.csv` under `dir`; returns both paths.
pub fn write_outputs(
    dir: &Path,
    results: &[TrialResult],
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let rows = trial_rows(results);
    let trials = dir.join("trials.csv");
    let summary = dir.join("summary.csv");
    write_csv(&rows, std::fs::File::create(&trials)?)?;
    write_csv(&summarize(&rows), std::fs::File::create(&summary)?)?;
    Ok((trials, summary))
}
