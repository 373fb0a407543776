//! Evaluation metrics: success / collision / lost rates and average reward.

use serde::{Deserialize, Serialize};
use skypath_core::agent::EpisodeResult;
use skypath_core::sim::StepOutcome;

/// Campaign metrics. Every episode lands in exactly one of the three rate
/// buckets, so `sr + cr + lr` is 100 up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Success rate, percent.
    pub sr: f64,
    /// Collision rate, percent.
    pub cr: f64,
    /// Lost (timeout) rate, percent.
    pub lr: f64,
    /// Mean cumulative reward.
    pub ar: f64,
    pub episodes: usize,
}

impl Metrics {
    pub fn from_results(results: &[EpisodeResult]) -> Metrics {
        assert!(!results.is_empty(), "no episodes to tally");
        let n = results.len() as f64;
        let count = |status: StepOutcome| {
            results.iter().filter(|r| r.outcome == status).count() as f64
        };
        let reward_sum: f64 = results.iter().map(|r| r.cumulative_reward).sum();
        Metrics {
            sr: 100.0 * count(StepOutcome::ReachedTarget) / n,
            cr: 100.0 * count(StepOutcome::Collision) / n,
            lr: 100.0 * count(StepOutcome::TimedOut) / n,
            ar: reward_sum / n,
            episodes: results.len(),
        }
    }
}

impl std::fmt::Display for Metrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SR {:.2}%  CR {:.2}%  LR {:.2}%  AR {:.3}",
            self.sr, self.cr, self.lr, self.ar
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(outcome: StepOutcome, reward: f64) -> EpisodeResult {
        EpisodeResult {
            outcome,
            cumulative_reward: reward,
            steps: 10,
        }
    }

    #[test]
    fn rates_partition_to_one_hundred() {
        let results = vec![
            result(StepOutcome::ReachedTarget, 10.0),
            result(StepOutcome::ReachedTarget, 12.0),
            result(StepOutcome::Collision, -4.0),
            result(StepOutcome::TimedOut, -1.0),
        ];
        let m = Metrics::from_results(&results);
        assert!((m.sr + m.cr + m.lr - 100.0).abs() < 0.01);
        assert_eq!(m.sr, 50.0);
        assert_eq!(m.cr, 25.0);
        assert_eq!(m.lr, 25.0);
        assert!((m.ar - 4.25).abs() < 1e-12);
    }
}
