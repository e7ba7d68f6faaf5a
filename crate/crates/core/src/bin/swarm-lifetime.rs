use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use swarm_lifetime::bounds::{self, AveragePower};
use swarm_lifetime::channel::ChannelKind;
use swarm_lifetime::engine::OnInfeasible;
use swarm_lifetime::experiment::{self, RunConfig};
use swarm_lifetime::generator::generate_subsets;
use swarm_lifetime::graph::{
    build_subset_graph, export_dot, ldip_partition, AdjacencyList, SubsetGraph, TieBreak,
};
use swarm_lifetime::model::SubsetSystem;
use swarm_lifetime::seed::{self, Stream};

#[derive(Parser)]
#[command(
    name = "swarm-lifetime",
    version,
    about = "Robot-swarm subset selection and lifetime simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random subset system as JSON.
    GenSubsets {
        #[arg(short = 'n', long, default_value_t = 30)]
        robots: usize,
        #[arg(short = 'm', long, default_value_t = 6)]
        subsets: usize,
        #[arg(short = 'k', long, default_value_t = 8)]
        k_min: usize,
        #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Partition a subset graph with LDIP.
    Partition {
        /// JSON file with either a subset system or an adjacency list.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TieArg::Random)]
        tie_break: TieArg,
        #[arg(long, env = "SWARM_SEED", default_value_t = 0)]
        seed: u64,
        /// Partition JSON; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print analytical lifetime bounds for a configuration.
    Bounds {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, env = "SWARM_SEED")]
        seed: Option<u64>,
    },
    /// Run a Monte Carlo sweep and write trials.csv and summary.csv.
    Simulate {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, env = "SWARM_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "SWARM_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        channel: Option<ChannelKind>,
        #[arg(long)]
        on_infeasible: Option<OnInfeasible>,
    },
    /// Recompute per-(M, strategy) statistics from a trials CSV.
    Summarize {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Random,
    Lowest,
}

#[derive(Serialize, Deserialize)]
struct SubsetsFile {
    n: usize,
    m: usize,
    k: usize,
    subsets: Vec<Vec<usize>>,
}

impl SubsetsFile {
    fn from_system(sys: &SubsetSystem) -> Self {
        SubsetsFile {
            n: sys.n_robots(),
            m: sys.len(),
            k: sys.k_min(),
            subsets: sys
                .subsets()
                .iter()
                .map(|s| s.iter().copied().collect())
                .collect(),
        }
    }

    fn into_system(self) -> Result<SubsetSystem> {
        if self.subsets.len() != self.m {
            bail!(
                "file declares m = {} but lists {} subsets",
                self.m,
                self.subsets.len()
            );
        }
        let sys = SubsetSystem::new(
            self.n,
            self.k,
            self.subsets
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        );
        let violations = sys.validate();
        if !violations.is_empty() {
            let msgs: Vec<String> = violations.iter().map(ToString::to_string).collect();
            bail!("invalid subset system: {}", msgs.join("; "));
        }
        Ok(sys)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GraphInput {
    Subsets(SubsetsFile),
    Graph(AdjacencyList),
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn bounds_table(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model()?;
    let p_tc = model.reference_power() * cfg.t_c;
    let e0 = cfg.initial_energy()?;
    let (eps_c, eps_t) = (cfg.energy.eps_coding, cfg.energy.eps_task);
    let cap = cfg.power_cap()?;
    let mut out = format!(
        "channel={} E0={e0} p*T_c={p_tc} eps_coding={eps_c} eps_task={eps_t} cap={cap}\n",
        model.kind.as_str()
    );
    out.push_str("M\tall_robots\tdisjoint_round_robin\tsample_groups\tsample_fading\n");
    for &m in &cfg.m_subsets {
        let all = bounds::bound_lemma1(e0, p_tc, eps_c, eps_t)?;
        let rr = bounds::bound_line_search_identical(e0, m, p_tc, eps_c, eps_t)?;
        let ts = seed::trial_seed(cfg.master_seed, m, 0);
        let sys = generate_subsets(
            cfg.n_robots,
            m,
            cfg.k_min,
            seed::stream_seed(ts, Stream::Subsets),
        )?;
        let partition = ldip_partition(
            &build_subset_graph(&sys),
            TieBreak::Random(seed::stream_seed(ts, Stream::Partition)),
        );
        let caps = vec![cap; cfg.n_robots];
        let avg = AveragePower::Analytic { model: &model }.per_robot(&caps, &model);
        let fading = bounds::bound_fading(
            &vec![e0; cfg.n_robots],
            &avg,
            &partition,
            &sys,
            cfg.t_c,
            eps_c,
            eps_t,
        )?;
        out.push_str(&format!(
            "{m}\t{all}\t{rr}\t{}\t{fading}\n",
            partition.len()
        ));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSubsets {
            robots,
            subsets,
            k_min,
            seed,
            out,
        } => {
            let sys = generate_subsets(robots, subsets, k_min, seed)?;
            let json = serde_json::to_string_pretty(&SubsetsFile::from_system(&sys))?;
            emit(out.as_deref(), &(json + "\n"))
        }
        Command::Partition {
            input,
            tie_break,
            seed,
            out,
            dot,
        } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let parsed: GraphInput = serde_json::from_str(&text).context(
                "expected a subset system {n, m, k, subsets} or a graph {vertices, adjacency}",
            )?;
            let graph = match parsed {
                GraphInput::Subsets(f) => build_subset_graph(&f.into_system()?),
                GraphInput::Graph(list) => SubsetGraph::from_adjacency_list(&list)?,
            };
            let tie = match tie_break {
                TieArg::Random => TieBreak::Random(seed),
                TieArg::Lowest => TieBreak::LowestIndex,
            };
            let partition = ldip_partition(&graph, tie);
            if let Some(p) = dot {
                fs::write(&p, export_dot(&graph, Some(&partition)))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            emit(
                out.as_deref(),
                &(serde_json::to_string_pretty(&partition)? + "\n"),
            )
        }
        Command::Bounds { config, seed } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            emit(None, &bounds_table(&cfg)?)
        }
        Command::Simulate {
            config,
            seed,
            output_dir,
            trials,
            channel,
            on_infeasible,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(c) = channel {
                cfg.channel.kind = c;
            }
            if let Some(p) = on_infeasible {
                cfg.on_infeasible = p;
            }
            let results = experiment::run_experiment(&cfg)?;
            let (trials_path, summary_path) = experiment::write_outputs(&cfg.output_dir, &results)?;
            eprintln!(
                "wrote {} and {}",
                trials_path.display(),
                summary_path.display()
            );
            Ok(())
        }
        Command::Summarize { input, out } => {
            let file =
                fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let rows = experiment::read_trial_rows(file)?;
            let mut buf = Vec::new();
            experiment::write_csv(&experiment::summarize(&rows), &mut buf)?;
            emit(out.as_deref(), &String::from_utf8(buf)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
