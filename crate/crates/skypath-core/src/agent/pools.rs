//! Fixed-capacity ring buffers for real and model-predicted experience.

use crate::dynamics::{ActionArray, NormState};
use rand::{Rng, RngExt};
use std::collections::VecDeque;

/// One realized environment transition. `next_action` is filled in when the
/// successor transition is stored, so on-policy bootstrap targets can use the
/// action actually taken at `next_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: NormState,
    pub action: ActionArray,
    pub reward: f64,
    pub next_state: NormState,
    pub done: bool,
    pub next_action: Option<ActionArray>,
}

/// A planner-predicted transition with a reliability weight in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedTransition {
    pub state: NormState,
    pub action: ActionArray,
    pub reward: f64,
    pub next_state: NormState,
    /// The plan's action at `next_state`; the last stage of a plan has none.
    pub next_action: Option<ActionArray>,
    pub w_rel: f64,
    pub episode: u64,
    /// Episode step index that `next_state` is a prediction of.
    pub predicted_step: usize,
}

/// Uniform-sampling ring buffer of realized transitions.
#[derive(Debug, Clone)]
pub struct ExperiencePool {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ExperiencePool {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ExperiencePool {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.buf[idx]
    }

    /// Append with eviction. When `chain` is set and the previous stored
    /// transition flows into this one, its `next_action` is filled.
    pub fn push(&mut self, t: Transition, chain: bool) {
        if chain {
            if let Some(prev) = self.buf.back_mut() {
                if !prev.done && prev.next_action.is_none() {
                    prev.next_action = Some(t.action);
                }
            }
        }
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn sample_indices(&self, rng: &mut impl Rng, n: usize) -> Vec<usize> {
        (0..n).map(|_| rng.random_range(0..self.buf.len())).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buf.iter()
    }
}

/// Ring buffer of predicted transitions with reliability-weighted sampling.
#[derive(Debug, Clone)]
pub struct PredictingPool {
    buf: VecDeque<PredictedTransition>,
    capacity: usize,
}

impl PredictingPool {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        PredictingPool {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn get(&self, idx: usize) -> &PredictedTransition {
        &self.buf[idx]
    }

    pub fn push(&mut self, t: PredictedTransition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredictedTransition> {
        self.buf.iter()
    }

    /// Sample indices with probability proportional to `w_rel`, by rejection
    /// against the weight ceiling of 1. Falls back to uniform draws if the
    /// pool weights are degenerate.
    pub fn weighted_sample(&self, rng: &mut impl Rng, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        let mut budget = 50 * n.max(1);
        while out.len() < n && budget > 0 {
            budget -= 1;
            let idx = rng.random_range(0..self.buf.len());
            if rng.random::<f64>() <= self.buf[idx].w_rel {
                out.push(idx);
            }
        }
        while out.len() < n {
            out.push(rng.random_range(0..self.buf.len()));
        }
        out
    }

    /// Reweight predictions of the realized step by their squared normalized
    /// state error: `w = exp(-||err||^2 / sigma^2)`. Returns how many entries
    /// matched.
    pub fn update_reliability(
        &mut self,
        episode: u64,
        step: usize,
        realized_next: &NormState,
        sigma: f64,
    ) -> usize {
        let mut updated = 0;
        for t in self.buf.iter_mut().rev() {
            if t.episode != episode {
                break;
            }
            if t.predicted_step + 16 < step {
                break;
            }
            if t.predicted_step == step {
                let mut err2 = 0.0;
                for (p, r) in t.next_state.iter().zip(realized_next) {
                    let d = p - r;
                    err2 += d * d;
                }
                t.w_rel = (-err2 / (sigma * sigma)).exp();
                updated += 1;
            }
        }
        updated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::STATE_DIM;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(tag: f64) -> Transition {
        Transition {
            state: [tag; STATE_DIM],
            action: [0.0, 0.0],
            reward: tag,
            next_state: [tag; STATE_DIM],
            done: false,
            next_action: None,
        }
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut pool = ExperiencePool::new(2);
        pool.push(transition(1.0), true);
        pool.push(transition(2.0), true);
        pool.push(transition(3.0), true);
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.get(0).reward, 2.0);
        assert_eq!(pool.get(1).reward, 3.0);
    }

    #[test]
    fn size_tracks_pushes_below_capacity() {
        let mut pool = ExperiencePool::new(100);
        for k in 0..7 {
            pool.push(transition(k as f64), true);
        }
        assert_eq!(pool.len(), 7);
    }

    #[test]
    fn chaining_fills_previous_next_action() {
        let mut pool = ExperiencePool::new(8);
        pool.push(transition(1.0), true);
        let mut t = transition(2.0);
        t.action = [0.5, -0.5];
        pool.push(t, true);
        assert_eq!(pool.get(0).next_action, Some([0.5, -0.5]));
        assert_eq!(pool.get(1).next_action, None);
    }

    #[test]
    fn done_boundary_breaks_chaining() {
        let mut pool = ExperiencePool::new(8);
        let mut t = transition(1.0);
        t.done = true;
        pool.push(t, true);
        pool.push(transition(2.0), true);
        assert_eq!(pool.get(0).next_action, None);
    }

    fn predicted(episode: u64, step: usize, value: f64) -> PredictedTransition {
        PredictedTransition {
            state: [0.0; STATE_DIM],
            action: [0.0, 0.0],
            reward: 0.0,
            next_state: [value; STATE_DIM],
            next_action: None,
            w_rel: 1.0,
            episode,
            predicted_step: step,
        }
    }

    #[test]
    fn reliability_matches_by_step() {
        let mut pool = PredictingPool::new(16);
        pool.push(predicted(1, 3, 0.0));
        pool.push(predicted(1, 4, 0.0));
        let realized = [0.0; STATE_DIM];
        let updated = pool.update_reliability(1, 3, &realized, 1.0);
        assert_eq!(updated, 1);
        assert_eq!(pool.get(0).w_rel, 1.0);
        assert_eq!(pool.get(1).w_rel, 1.0);
    }

    #[test]
    fn reliability_decays_with_error() {
        let mut pool = PredictingPool::new(16);
        pool.push(predicted(0, 1, 0.0));
        let mut realized = [0.0; STATE_DIM];
        realized[0] = 1.0;
        pool.update_reliability(0, 1, &realized, 1.0);
        assert!((pool.get(0).w_rel - (-1.0_f64).exp()).abs() < 1e-12);
        // Larger error, smaller weight.
        let mut pool2 = PredictingPool::new(16);
        pool2.push(predicted(0, 1, 0.0));
        realized[0] = 2.0;
        pool2.update_reliability(0, 1, &realized, 1.0);
        assert!(pool2.get(0).w_rel < pool.get(0).w_rel);
    }

    #[test]
    fn no_matching_prediction_is_noop() {
        let mut pool = PredictingPool::new(4);
        pool.push(predicted(0, 9, 0.5));
        let before = pool.get(0).clone();
        assert_eq!(pool.update_reliability(0, 2, &[0.0; STATE_DIM], 1.0), 0);
        assert_eq!(*pool.get(0), before);
    }

    #[test]
    fn weighted_sampling_prefers_reliable_entries() {
        let mut pool = PredictingPool::new(8);
        let mut low = predicted(0, 1, 0.0);
        low.w_rel = 0.01;
        let high = predicted(0, 2, 0.0);
        pool.push(low);
        pool.push(high);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let picks = pool.weighted_sample(&mut rng, 2000);
        let high_share = picks.iter().filter(|&&i| i == 1).count() as f64 / picks.len() as f64;
        assert!(high_share > 0.9, "high-weight share {high_share}");
    }
}
