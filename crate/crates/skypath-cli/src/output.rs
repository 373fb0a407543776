//! Output writers: per-episode logs, smoothed curves, trajectory traces and
//! the optional SVG rendering.

use anyhow::{Context, Result};
use serde::Serialize;
use skypath_core::agent::EpisodeResult;
use skypath_core::sim::{StepOutcome, World};
use skypath_core::trace::TraceStep;
use std::io::Write;
use std::path::Path;

#[derive(Serialize)]
struct HeaderRecord<'a> {
    r#type: &'a str,
    config_hash: &'a str,
}

#[derive(Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub outcome: StepOutcome,
    pub reward: f64,
    pub steps: usize,
}

/// Line-delimited JSON writer with a config-hash header record.
pub struct JsonlLog {
    file: std::fs::File,
}

impl JsonlLog {
    pub fn create(path: &Path, config_hash: &str) -> Result<Self> {
        let mut file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        let header = HeaderRecord {
            r#type: "header",
            config_hash,
        };
        writeln!(file, "{}", serde_json::to_string(&header)?)?;
        Ok(JsonlLog { file })
    }

    pub fn append(path: &Path) -> Result<Self> {
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .with_context(|| format!("appending to {}", path.display()))?;
        Ok(JsonlLog { file })
    }

    pub fn record(&mut self, value: &impl Serialize) -> Result<()> {
        writeln!(self.file, "{}", serde_json::to_string(value)?)?;
        Ok(())
    }
}

/// Sliding-window curves over per-episode results: success ratio and mean
/// reward. Row count is `episodes - window + 1` (empty when episodes fall
/// short of one window).
pub fn write_curves(
    dir: &Path,
    results: &[EpisodeResult],
    window: usize,
    config_hash: &str,
) -> Result<()> {
    let success: Vec<f64> = results
        .iter()
        .map(|r| if r.outcome == StepOutcome::ReachedTarget { 1.0 } else { 0.0 })
        .collect();
    let rewards: Vec<f64> = results.iter().map(|r| r.cumulative_reward).collect();
    write_window_curve(
        &dir.join("success_curve.tsv"),
        "success_ratio",
        &success,
        window,
        config_hash,
    )?;
    write_window_curve(
        &dir.join("reward_curve.tsv"),
        "mean_reward",
        &rewards,
        window,
        config_hash,
    )
}

fn write_window_curve(
    path: &Path,
    name: &str,
    values: &[f64],
    window: usize,
    config_hash: &str,
) -> Result<()> {
    let mut file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# config_hash={config_hash}")?;
    writeln!(file, "episode\t{name}")?;
    if values.len() < window {
        return Ok(());
    }
    let mut sum: f64 = values[..window].iter().sum();
    writeln!(file, "{}\t{:.6}", window, sum / window as f64)?;
    for k in window..values.len() {
        sum += values[k] - values[k - window];
        writeln!(file, "{}\t{:.6}", k + 1, sum / window as f64)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct WorldRecord<'a> {
    r#type: &'a str,
    arena: [f64; 2],
    start: [f64; 2],
    target: [f64; 2],
    target_radius: f64,
    obstacles: Vec<ObstacleRecord>,
}

#[derive(Serialize)]
struct ObstacleRecord {
    x: f64,
    y: f64,
    radius: f64,
    /// Obstacle radius plus the safe distance: the dashed annulus in plots.
    safe_radius: f64,
    velocity_x: f64,
}

#[derive(Serialize)]
struct StepRecord<'a> {
    r#type: &'a str,
    #[serde(flatten)]
    step: &'a TraceStep,
}

/// Plot-ready trajectory trace: header, world geometry (with safe-zone
/// radii), then one record per step.
pub fn write_trace(
    path: &Path,
    world: &World,
    safe_distance: f64,
    target_radius: f64,
    steps: &[TraceStep],
    config_hash: &str,
) -> Result<()> {
    let mut log = JsonlLog::create(path, config_hash)?;
    let record = WorldRecord {
        r#type: "world",
        arena: [world.arena.width, world.arena.depth],
        start: [world.start.x, world.start.y],
        target: [world.target.x, world.target.y],
        target_radius,
        obstacles: world
            .obstacles
            .iter()
            .map(|o| ObstacleRecord {
                x: o.center.x,
                y: o.center.y,
                radius: o.radius,
                safe_radius: o.radius + safe_distance,
                velocity_x: o.velocity_x,
            })
            .collect(),
    };
    log.record(&record)?;
    for step in steps {
        log.record(&StepRecord {
            r#type: "step",
            step,
        })?;
    }
    Ok(())
}

/// Vector rendering of a single episode: obstacles with dashed safe zones,
/// the flown path, start and target markers.
pub fn write_svg(
    path: &Path,
    world: &World,
    safe_distance: f64,
    target_radius: f64,
    steps: &[TraceStep],
) -> Result<()> {
    let (w, d) = (world.arena.width, world.arena.depth);
    let scale = 4.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        w * scale,
        d * scale,
        w,
        d
    ));
    // Flip y so the origin sits bottom-left.
    svg.push_str(&format!("<g transform=\"translate(0,{d}) scale(1,-1)\">\n"));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{d}\" fill=\"#fbfbf8\" stroke=\"#333\" stroke-width=\"0.4\"/>\n"
    ));
    for o in &world.obstacles {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"#8aa3b5\" stroke=\"#44606f\" stroke-width=\"0.2\"/>\n",
            o.center.x, o.center.y, o.radius
        ));
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#222\" stroke-width=\"0.2\" stroke-dasharray=\"1.2 1.2\"/>\n",
            o.center.x,
            o.center.y,
            o.radius + safe_distance
        ));
    }
    svg.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#2a7d2a\" stroke-width=\"0.4\"/>\n",
        world.target.x, world.target.y, target_radius
    ));
    svg.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"0.9\" fill=\"#2a7d2a\"/>\n",
        world.target.x, world.target.y
    ));
    svg.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"0.9\" fill=\"#b33\"/>\n",
        world.start.x, world.start.y
    ));
    if !steps.is_empty() {
        let mut points = format!("{:.2},{:.2}", world.start.x, world.start.y);
        for s in steps {
            points.push_str(&format!(" {:.2},{:.2}", s.x, s.y));
        }
        svg.push_str(&format!(
            "<polyline points=\"{points}\" fill=\"none\" stroke=\"#b33\" stroke-width=\"0.35\"/>\n"
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}
