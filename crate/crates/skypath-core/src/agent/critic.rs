//! State-action value network with its target twin, TD training steps, and
//! the predicting-pool warm start.

use super::pools::PredictingPool;
use crate::dynamics::{ActionArray, NormState};
use crate::mdp::{ACTION_DIM, STATE_DIM};
use crate::nn::{
    backward_mlp, forward_mlp, forward_mlp_cached, soft_update, AdamState, MlpSpec,
    OptimizerConfig, ParamVector, Squash,
};
use rand::Rng;

/// Q(s, a) with state and action concatenated at the input.
#[derive(Debug, Clone)]
pub struct Critic {
    pub spec: MlpSpec,
    pub params: ParamVector,
    pub target: ParamVector,
    pub opt: AdamState,
}

/// One supervised TD sample: regress Q(s, a) toward `y` with weight `w`.
#[derive(Debug, Clone, Copy)]
pub struct TdSample {
    pub state: NormState,
    pub action: ActionArray,
    pub y: f64,
    pub weight: f64,
}

fn critic_input(state: &NormState, action: &ActionArray) -> Vec<f64> {
    let mut x = Vec::with_capacity(STATE_DIM + ACTION_DIM);
    x.extend_from_slice(state);
    x.extend_from_slice(action);
    x
}

impl Critic {
    pub fn new(hidden: &[usize], lr: f64, rng: &mut impl Rng) -> Self {
        let spec = MlpSpec::new(STATE_DIM + ACTION_DIM, hidden.to_vec(), 1, Squash::None);
        let params = spec.init_params(rng);
        let target = params.clone();
        let opt = AdamState::new(
            &params,
            OptimizerConfig {
                learning_rate: lr,
                grad_clip: Some(10.0),
                ..OptimizerConfig::default()
            },
        );
        Critic {
            spec,
            params,
            target,
            opt,
        }
    }

    pub fn q(&self, state: &NormState, action: &ActionArray) -> f64 {
        forward_mlp(&self.spec, &self.params, &critic_input(state, action))
            .expect("critic input width is fixed")[0]
    }

    pub fn q_target(&self, state: &NormState, action: &ActionArray) -> f64 {
        forward_mlp(&self.spec, &self.target, &critic_input(state, action))
            .expect("critic input width is fixed")[0]
    }

    /// One optimizer step on weighted squared TD error. Returns the
    /// pre-update loss.
    pub fn td_step(&mut self, samples: &[TdSample]) -> f64 {
        assert!(!samples.is_empty());
        let mut grads = self.params.zeros_like();
        let mut loss = 0.0;
        let n = samples.len() as f64;
        for s in samples {
            let cache = forward_mlp_cached(&self.spec, &self.params, &critic_input(&s.state, &s.action))
                .expect("critic input width is fixed");
            let diff = cache.output()[0] - s.y;
            loss += s.weight * diff * diff;
            let d_out = [2.0 * s.weight * diff / n];
            backward_mlp(&self.spec, &self.params, &cache, &d_out, &mut grads);
        }
        self.opt.step(&mut self.params, &grads);
        loss / n
    }

    /// Weighted squared TD error of a sample set without updating anything.
    pub fn td_loss(&self, samples: &[TdSample]) -> f64 {
        assert!(!samples.is_empty());
        let mut loss = 0.0;
        for s in samples {
            let diff = self.q(&s.state, &s.action) - s.y;
            loss += s.weight * diff * diff;
        }
        loss / samples.len() as f64
    }

    pub fn soft_update_target(&mut self, tau: f64) {
        soft_update(&mut self.target, &self.params, tau);
    }
}

/// TD samples for every entry of a predicting pool. Predicted tuples never
/// terminate, so the bootstrap term always contributes; the plan's chained
/// next action stands in for the policy at the predicted next state (the last
/// stage reuses its own action).
pub fn pool_td_samples(critic: &Critic, pool: &PredictingPool, gamma: f64) -> Vec<TdSample> {
    pool.iter()
        .map(|t| {
            let a_next = t.next_action.unwrap_or(t.action);
            let y = t.reward + gamma * critic.q_target(&t.next_state, &a_next);
            TdSample {
                state: t.state,
                action: t.action,
                y,
                weight: t.w_rel,
            }
        })
        .collect()
}

/// Warm-start the critic on the predicting pool: `steps` weighted TD steps in
/// full passes, soft-updating the target each step. After every pass the
/// weighted loss on the pool (held against the pre-warm-start target network)
/// is compared to the previous pass; an increase restores the pass snapshot
/// and halves the learning rate, so the recorded loss never rises. Returns
/// (initial loss, final loss); a zero-step call or an empty pool is a no-op.
pub fn warm_start_critic(
    critic: &mut Critic,
    pool: &PredictingPool,
    steps: usize,
    gamma: f64,
    tau: f64,
    batch_size: usize,
    rng: &mut impl Rng,
) -> Option<(f64, f64)> {
    if steps == 0 || pool.is_empty() {
        return None;
    }
    let frozen_eval = critic.clone();
    let eval_samples = pool_td_samples(&frozen_eval, pool, gamma);
    let mut prev = critic.td_loss(&eval_samples);
    let initial = prev;
    let batch = batch_size.min(pool.len()).max(1);
    let per_pass = pool.len().div_ceil(batch);
    let mut remaining = steps;
    while remaining > 0 {
        let snapshot = (critic.params.clone(), critic.target.clone(), critic.opt.clone());
        let pass_steps = per_pass.min(remaining);
        for _ in 0..pass_steps {
            let idx = pool.weighted_sample(rng, batch);
            let samples: Vec<TdSample> = idx
                .into_iter()
                .map(|i| {
                    let t = pool.get(i);
                    let a_next = t.next_action.unwrap_or(t.action);
                    let y = t.reward + gamma * critic.q_target(&t.next_state, &a_next);
                    TdSample {
                        state: t.state,
                        action: t.action,
                        y,
                        weight: t.w_rel,
                    }
                })
                .collect();
            critic.td_step(&samples);
            critic.soft_update_target(tau);
        }
        remaining -= pass_steps;
        let loss = critic.td_loss(&eval_samples);
        if loss > prev {
            let lr = critic.opt.learning_rate() / 2.0;
            critic.params = snapshot.0;
            critic.target = snapshot.1;
            critic.opt = snapshot.2;
            critic.opt.set_learning_rate(lr);
        } else {
            prev = loss;
        }
    }
    Some((initial, prev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::pools::PredictedTransition;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn entry(rng: &mut ChaCha8Rng) -> PredictedTransition {
        let mut state = [0.0; STATE_DIM];
        let mut next_state = [0.0; STATE_DIM];
        for k in 0..STATE_DIM {
            state[k] = rng.random_range(-1.0..1.0);
            next_state[k] = rng.random_range(-1.0..1.0);
        }
        PredictedTransition {
            state,
            action: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            reward: rng.random_range(-1.0..1.0),
            next_state,
            next_action: Some([0.1, 0.2]),
            w_rel: rng.random_range(0.2..1.0),
            episode: 0,
            predicted_step: 1,
        }
    }

    #[test]
    fn zero_steps_warm_start_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut critic = Critic::new(&[16, 16], 0.001, &mut rng);
        let before = critic.params.clone();
        let mut pool = PredictingPool::new(8);
        pool.push(entry(&mut rng));
        assert!(warm_start_critic(&mut critic, &pool, 0, 0.99, 0.001, 4, &mut rng).is_none());
        assert_eq!(critic.params, before);
    }

    #[test]
    fn warm_start_reduces_pool_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut critic = Critic::new(&[32, 32], 0.003, &mut rng);
        let mut pool = PredictingPool::new(256);
        for _ in 0..128 {
            pool.push(entry(&mut rng));
        }
        let (initial, fin) =
            warm_start_critic(&mut critic, &pool, 100, 0.99, 0.001, 32, &mut rng).unwrap();
        assert!(
            fin < initial,
            "warm start should reduce pool TD loss: {initial} -> {fin}"
        );
    }

    #[test]
    fn done_free_targets_bootstrap_all_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let critic = Critic::new(&[8], 0.001, &mut rng);
        let mut pool = PredictingPool::new(4);
        pool.push(entry(&mut rng));
        let samples = pool_td_samples(&critic, &pool, 0.99);
        let t = pool.get(0);
        let manual = t.reward + 0.99 * critic.q_target(&t.next_state, &t.next_action.unwrap());
        assert!((samples[0].y - manual).abs() < 1e-12);
    }
}
