//! Benchmark harness library: seeded training runs, evaluation campaigns,
//! comparison grids and trajectory export for the navigation stack.

pub mod config;
pub mod metrics;
pub mod output;

pub use config::{derive_seed, RunConfig, ScenarioChoice};
pub use metrics::Metrics;

use anyhow::{bail, Context, Result};
use output::{EpisodeRecord, JsonlLog};
use serde::Serialize;
use skypath_core::agent::{Agent, AgentVariant, EpisodeResult};
use skypath_core::sim::spawn_scenario;
use std::path::Path;
use std::time::Instant;

/// Result of a training run.
pub struct TrainOutcome {
    pub results: Vec<EpisodeResult>,
    pub checkpoint_dir: std::path::PathBuf,
    pub resumed_from: u64,
}

/// Train the configured agent, appending per-episode logs and smoothed
/// curves under the output directory and checkpointing periodically.
/// Resumes from an existing checkpoint (parameters and episode counter; the
/// replay pools restart empty) when one with a matching config hash exists.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let variant = cfg.agent_variant()?;
    let scenario = cfg.scenario()?;
    let hash = cfg.hash();
    let out_dir = Path::new(&cfg.run.out_dir);
    std::fs::create_dir_all(out_dir)?;
    let checkpoint_dir = out_dir.join("checkpoint");
    let setup = cfg.setup();

    let mut agent;
    let mut start_episode = 0u64;
    let manifest = checkpoint_dir.join("manifest.json");
    if manifest.exists() {
        agent = Agent::load_checkpoint(variant, &setup, &checkpoint_dir, Some(&hash), cfg.run.seed)
            .context("resuming from checkpoint")?;
        start_episode = agent.episode_count();
        if cfg.run.verbose {
            eprintln!("resuming at episode {start_episode}");
        }
    } else {
        agent = Agent::new(variant, &setup, cfg.run.seed);
        if variant == AgentVariant::Proposed && cfg.run.pretrain_episodes > 0 {
            let loss = agent.pretrain_model(
                cfg.run.pretrain_episodes,
                cfg.run.pretrain_steps,
                derive_seed(cfg.run.seed, u64::MAX),
            );
            if cfg.run.verbose {
                eprintln!("pretraining loss: {loss:?}");
            }
        }
    }

    let episodes_path = out_dir.join("episodes.jsonl");
    let times_path = out_dir.join("episode_times.jsonl");
    let (mut episodes_log, mut times_log) = if start_episode > 0 && episodes_path.exists() {
        (JsonlLog::append(&episodes_path)?, JsonlLog::append(&times_path)?)
    } else {
        (
            JsonlLog::create(&episodes_path, &hash)?,
            JsonlLog::create(&times_path, &hash)?,
        )
    };

    let mut results = Vec::with_capacity(cfg.run.episodes);
    for episode in (start_episode + 1)..=(cfg.run.episodes as u64) {
        let spec = scenario.spec(&cfg.arena, derive_seed(cfg.run.seed, episode))?;
        let mut world = spawn_scenario(&spec, &cfg.sim)?;
        let t0 = Instant::now();
        let (_, result) = agent.run_episode(&mut world, true, true);
        let wall_ms = t0.elapsed().as_millis() as u64;
        agent.maybe_warm_start();
        episodes_log.record(&EpisodeRecord {
            episode: episode as usize,
            outcome: result.outcome,
            reward: result.cumulative_reward,
            steps: result.steps,
        })?;
        #[derive(Serialize)]
        struct TimeRecord {
            episode: usize,
            wall_ms: u64,
        }
        times_log.record(&TimeRecord {
            episode: episode as usize,
            wall_ms,
        })?;
        if cfg.run.verbose && episode % 25 == 0 {
            eprintln!(
                "episode {episode}: {:?} reward {:.2} steps {}",
                result.outcome, result.cumulative_reward, result.steps
            );
        }
        results.push(result);
        if cfg.run.checkpoint_every > 0 && episode % cfg.run.checkpoint_every as u64 == 0 {
            agent.save_checkpoint(&checkpoint_dir, &hash)?;
        }
    }
    agent.save_checkpoint(&checkpoint_dir, &hash)?;
    output::write_curves(out_dir, &results, cfg.run.curve_window, &hash)?;
    Ok(TrainOutcome {
        results,
        checkpoint_dir,
        resumed_from: start_episode,
    })
}

/// Load the checkpointed agent described by a config.
pub fn load_agent(cfg: &RunConfig, checkpoint_dir: &Path, seed: u64) -> Result<Agent> {
    let variant = cfg.agent_variant()?;
    Agent::load_checkpoint(variant, &cfg.setup(), checkpoint_dir, Some(&cfg.hash()), seed)
        .context("loading checkpoint")
}

/// Run a frozen policy for `episodes` seeded episodes in the scenario,
/// re-randomizing obstacle placement (and endpoints) per episode.
/// Exploration and learning are disabled. Episodes run in parallel and merge
/// by index.
pub fn evaluate(
    agent_template: &Agent,
    scenario: &ScenarioChoice,
    arena: &skypath_core::sim::ArenaConfig,
    sim: &skypath_core::sim::SimConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeResult>> {
    if episodes == 0 {
        bail!("evaluation needs at least one episode");
    }
    let specs: Result<Vec<_>> = (0..episodes)
        .map(|k| scenario.spec(arena, derive_seed(seed, k as u64)))
        .collect();
    let specs = specs?;
    let run_one = |k: usize| -> Result<EpisodeResult> {
        let mut agent = agent_template.clone();
        agent.reseed(derive_seed(seed ^ 0xa5a5_5a5a, k as u64));
        let mut world = spawn_scenario(&specs[k], sim)?;
        let (_, result) = agent.run_episode(&mut world, false, false);
        Ok(result)
    };
    use rayon::prelude::*;
    (0..episodes).into_par_iter().map(run_one).collect()
}

/// One row of the comparison grid.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub agent: String,
    pub scenario: String,
    pub metrics: Metrics,
}

/// Evaluate several checkpoints across several scenarios and write the grid
/// as tab-separated text.
pub fn compare(
    entries: &[(String, Agent, RunConfig)],
    scenarios: &[ScenarioChoice],
    episodes: usize,
    seed: u64,
    out_path: &Path,
) -> Result<Vec<CompareRow>> {
    if entries.len() < 2 {
        bail!("compare needs at least two checkpoints");
    }
    let mut rows = Vec::new();
    for (name, agent, cfg) in entries {
        for scenario in scenarios {
            let results = evaluate(agent, scenario, &cfg.arena, &cfg.sim, episodes, seed)?;
            rows.push(CompareRow {
                agent: name.clone(),
                scenario: scenario.label(),
                metrics: Metrics::from_results(&results),
            });
        }
    }
    let mut text = String::from("agent\tscenario\tsr\tcr\tlr\tar\tepisodes\n");
    for row in &rows {
        text.push_str(&format!(
            "{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.4}\t{}\n",
            row.agent,
            row.scenario,
            row.metrics.sr,
            row.metrics.cr,
            row.metrics.lr,
            row.metrics.ar,
            row.metrics.episodes
        ));
    }
    std::fs::write(out_path, text).with_context(|| format!("writing {}", out_path.display()))?;
    Ok(rows)
}

/// Export a single-episode trajectory trace (and an SVG rendering) for a
/// frozen policy.
pub fn export_trajectory(
    agent_template: &Agent,
    cfg: &RunConfig,
    seed: u64,
    out_dir: &Path,
    render_svg: bool,
) -> Result<EpisodeResult> {
    std::fs::create_dir_all(out_dir)?;
    let scenario = cfg.scenario()?;
    let spec = scenario.spec(&cfg.arena, seed)?;
    let world0 = spawn_scenario(&spec, &cfg.sim)?;
    let mut agent = agent_template.clone();
    agent.reseed(derive_seed(seed, 0x7ace));
    let mut world = world0.clone();
    let (steps, result) = agent.run_episode(&mut world, false, false);
    output::write_trace(
        &out_dir.join("trajectory.jsonl"),
        &world0,
        cfg.sim.safe_distance,
        cfg.sim.target_radius,
        &steps,
        &cfg.hash(),
    )?;
    if render_svg {
        output::write_svg(
            &out_dir.join("trajectory.svg"),
            &world0,
            cfg.sim.safe_distance,
            cfg.sim.target_radius,
            &steps,
        )?;
    }
    Ok(result)
}
