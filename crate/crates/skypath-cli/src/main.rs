//! `skypath` command line: train, evaluate, compare, export-traj.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use skypath_cli::{config::ScenarioChoice, derive_seed, evaluate, load_agent, train, Metrics, RunConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "skypath", version, about = "UAV path-planning benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Agent variant override: proposed|ddpg|td3.
    #[arg(long)]
    agent: Option<String>,
    /// Scenario override: training|e1|e2|dynamic:<v> or a scenario file.
    #[arg(long)]
    scenario: Option<String>,
    /// Episode count override.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.run.out_dir = out.display().to_string();
        }
        if let Some(agent) = &self.agent {
            cfg.run.agent = agent.clone();
        }
        if let Some(scenario) = &self.scenario {
            cfg.run.scenario = scenario.clone();
        }
        if let Some(episodes) = self.episodes {
            cfg.run.episodes = episodes;
        }
        if self.verbose {
            cfg.run.verbose = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent; writes logs, curves and checkpoints to the output dir.
    Train(CommonArgs),
    /// Evaluate a trained checkpoint over seeded episodes.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint directory (defaults to <out>/checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate several checkpoints across the benchmark scenario grid.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Config files describing the runs to compare (their checkpoints
        /// must exist under each config's output directory).
        #[arg(long, required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        /// Scenario grid; defaults to e1, e2, dynamic:10, dynamic:15.
        #[arg(long)]
        grid: Vec<String>,
    },
    /// Export a single-episode trajectory trace and SVG rendering.
    ExportTraj {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let outcome = train(&cfg)?;
            if !outcome.results.is_empty() {
                let metrics = Metrics::from_results(&outcome.results);
                println!("trained {} episodes: {metrics}", outcome.results.len());
            } else {
                println!("checkpoint already complete; nothing to train");
            }
            println!("checkpoint: {}", outcome.checkpoint_dir.display());
            Ok(())
        }
        Command::Evaluate { common, checkpoint } => {
            let cfg = common.resolve()?;
            let dir = checkpoint
                .unwrap_or_else(|| PathBuf::from(&cfg.run.out_dir).join("checkpoint"));
            let agent = load_agent(&cfg, &dir, derive_seed(cfg.run.seed, 0xe7a1))?;
            let results = evaluate(
                &agent,
                &cfg.scenario()?,
                &cfg.arena,
                &cfg.sim,
                cfg.run.eval_episodes,
                cfg.run.seed,
            )?;
            let metrics = Metrics::from_results(&results);
            println!("{metrics}");
            Ok(())
        }
        Command::Compare { common, runs, grid } => {
            let cfg = common.resolve()?;
            let grid: Vec<ScenarioChoice> = if grid.is_empty() {
                ["e1", "e2", "dynamic:10", "dynamic:15"]
                    .iter()
                    .map(|s| ScenarioChoice::parse(s))
                    .collect::<Result<_>>()?
            } else {
                grid.iter()
                    .map(|s| ScenarioChoice::parse(s))
                    .collect::<Result<_>>()?
            };
            let mut entries = Vec::new();
            for path in &runs {
                let run_cfg = RunConfig::from_file(path)?;
                let dir = PathBuf::from(&run_cfg.run.out_dir).join("checkpoint");
                let agent = load_agent(&run_cfg, &dir, derive_seed(run_cfg.run.seed, 0xc0))
                    .with_context(|| format!("run {}", path.display()))?;
                entries.push((run_cfg.run.agent.clone(), agent, run_cfg));
            }
            let out = PathBuf::from(&cfg.run.out_dir);
            std::fs::create_dir_all(&out)?;
            let rows = skypath_cli::compare(
                &entries,
                &grid,
                cfg.run.eval_episodes,
                cfg.run.seed,
                &out.join("compare.tsv"),
            )?;
            println!("{:<10} {:<12} {:>7} {:>7} {:>7} {:>9}", "agent", "scenario", "SR%", "CR%", "LR%", "AR");
            for row in rows {
                println!(
                    "{:<10} {:<12} {:>7.2} {:>7.2} {:>7.2} {:>9.3}",
                    row.agent, row.scenario, row.metrics.sr, row.metrics.cr, row.metrics.lr, row.metrics.ar
                );
            }
            Ok(())
        }
        Command::ExportTraj { common, checkpoint } => {
            let cfg = common.resolve()?;
            let dir = checkpoint
                .unwrap_or_else(|| PathBuf::from(&cfg.run.out_dir).join("checkpoint"));
            let agent = load_agent(&cfg, &dir, derive_seed(cfg.run.seed, 0x77a))?;
            let out = PathBuf::from(&cfg.run.out_dir).join("traj");
            let result = skypath_cli::export_trajectory(&agent, &cfg, cfg.run.seed, &out, true)?;
            println!(
                "exported {} ({:?}, reward {:.2}, {} steps)",
                out.join("trajectory.jsonl").display(),
                result.outcome,
                result.cumulative_reward,
                result.steps
            );
            Ok(())
        }
    }
}
