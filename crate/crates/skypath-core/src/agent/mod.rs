//! Actor-critic training engine: the planner-as-actor agent with its
//! predicting pool and critic warm start, plus plain DDPG and twin-critic
//! delayed (TD3-style) baselines behind one interface.

pub mod critic;
pub mod pools;

pub use critic::{pool_td_samples, warm_start_critic, Critic, TdSample};
pub use pools::{ExperiencePool, PredictedTransition, PredictingPool, Transition};

use crate::dynamics::{
    ActionArray, DynConfig, DynamicsModel, HistoryBuffer, KinematicModel, NormState,
    TrajectoryWindow, TransitionModel,
};
use crate::mdp::{
    bearing_error, build_state, total_reward, Action, NormSpec, RewardInputs, RewardWeights,
    StateVector,
};
use crate::mpc::{MpcConfig, MpcPlan, MpcPolicy, SolveRequest, WorldBelief};
use crate::nn::{
    backward_mlp, forward_mlp, forward_mlp_cached, load_params, save_params, soft_update,
    validate_layout, AdamState, MlpSpec, NnError, OptimizerConfig, ParamVector, Squash,
};
use crate::sim::{
    classify_step, lidar_scan, nearest_obstacle_distance, step_kinematics, step_obstacles,
    ArenaConfig, SimConfig, StepOutcome, UavKinematicState, World,
};
use crate::trace::TraceStep;
use rand::{Rng, RngExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parameter file error: {0}")]
    Nn(#[from] NnError),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentVariant {
    Proposed,
    Ddpg,
    Td3,
}

impl std::fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentVariant::Proposed => write!(f, "proposed"),
            AgentVariant::Ddpg => write!(f, "ddpg"),
            AgentVariant::Td3 => write!(f, "td3"),
        }
    }
}

impl std::str::FromStr for AgentVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposed" => Ok(AgentVariant::Proposed),
            "ddpg" => Ok(AgentVariant::Ddpg),
            "td3" => Ok(AgentVariant::Td3),
            other => Err(format!("unknown agent variant '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub batch_size: usize,
    pub explore_noise_std: f64,
    pub tau: f64,
    pub experience_capacity: usize,
    pub predicting_capacity: usize,
    pub max_episodes: usize,
    /// Fraction of the batch drawn from the predicting pool.
    pub mix_fraction: f64,
    /// Length scale of the reliability weight on predicted transitions.
    pub sigma_rel: f64,
    /// Real transitions collected before updates start.
    pub warmup_transitions: usize,
    /// Mini-batch for the per-step dynamics-model update.
    pub model_batch: usize,
    pub warm_start_steps: usize,
    pub warm_start_min_pool: usize,
    /// Refresh the warm start after every episode instead of once.
    pub warm_start_per_episode: bool,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub td3_policy_noise: f64,
    pub td3_noise_clip: f64,
    pub td3_policy_delay: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.99,
            critic_lr: 0.001,
            actor_lr: 0.001,
            batch_size: 256,
            explore_noise_std: 0.2,
            tau: 0.001,
            experience_capacity: 100_000,
            predicting_capacity: 20_000,
            max_episodes: 5000,
            mix_fraction: 0.25,
            sigma_rel: 1.0,
            warmup_transitions: 1000,
            model_batch: 8,
            warm_start_steps: 100,
            warm_start_min_pool: 256,
            warm_start_per_episode: false,
            actor_hidden: vec![256, 256],
            critic_hidden: vec![256, 256],
            td3_policy_noise: 0.2,
            td3_noise_clip: 0.5,
            td3_policy_delay: 2,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err("gamma must lie in [0, 1)".into());
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err("tau must lie in (0, 1]".into());
        }
        if self.experience_capacity < self.batch_size {
            return Err("experience capacity must be at least the batch size".into());
        }
        if !(0.0..=1.0).contains(&self.mix_fraction) {
            return Err("mix_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Everything the agent observes at one step.
#[derive(Debug, Clone)]
pub struct Observation {
    pub uav: UavKinematicState,
    pub state: StateVector,
    pub norm_state: NormState,
    pub target: crate::geom::Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: StepOutcome,
    pub cumulative_reward: f64,
    pub steps: usize,
}

/// Deterministic tanh-squashed policy network for the baselines.
#[derive(Debug, Clone)]
pub struct MlpActor {
    pub spec: MlpSpec,
    pub params: ParamVector,
    pub target: ParamVector,
    pub opt: AdamState,
}

impl MlpActor {
    pub fn new(hidden: &[usize], lr: f64, rng: &mut impl Rng) -> Self {
        let spec = MlpSpec::new(
            crate::mdp::STATE_DIM,
            hidden.to_vec(),
            crate::mdp::ACTION_DIM,
            Squash::Tanh,
        );
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
        MlpActor {
            spec,
            params,
            target,
            opt,
        }
    }

    pub fn act(&self, state: &NormState) -> ActionArray {
        let out = forward_mlp(&self.spec, &self.params, state).expect("actor input width is fixed");
        [out[0], out[1]]
    }

    pub fn act_target(&self, state: &NormState) -> ActionArray {
        let out = forward_mlp(&self.spec, &self.target, state).expect("actor input width is fixed");
        [out[0], out[1]]
    }
}

/// Ring buffer of model-training windows.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    buf: VecDeque<TrajectoryWindow>,
    capacity: usize,
}

impl WindowBuffer {
    pub fn new(capacity: usize) -> Self {
        WindowBuffer {
            buf: VecDeque::new(),
            capacity,
        }
    }

    pub fn push(&mut self, w: TrajectoryWindow) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(w);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn get(&self, idx: usize) -> &TrajectoryWindow {
        &self.buf[idx]
    }
}

#[derive(Debug, Clone)]
enum PolicyKind {
    Proposed {
        model: DynamicsModel,
        /// When set, the planner rolls this exact model instead of the
        /// learned one (best-case diagnostics).
        oracle: Option<KinematicModel>,
        planner: MpcPolicy,
        history: HistoryBuffer,
        windows: WindowBuffer,
        predicting: PredictingPool,
        prev_action: ActionArray,
        warm_started: bool,
    },
    Baseline {
        actor: MlpActor,
    },
}

/// Bundle of the sub-configs an agent is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSetup {
    pub agent: AgentConfig,
    pub sim: SimConfig,
    pub arena: ArenaConfig,
    pub reward: RewardWeights,
    pub mpc: MpcConfig,
    pub dynamics: DynConfig,
}

impl Default for AgentSetup {
    fn default() -> Self {
        AgentSetup {
            agent: AgentConfig::default(),
            sim: SimConfig::default(),
            arena: ArenaConfig::default(),
            reward: RewardWeights::default(),
            mpc: MpcConfig::default(),
            dynamics: DynConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub variant: AgentVariant,
    pub cfg: AgentConfig,
    pub sim: SimConfig,
    pub arena: ArenaConfig,
    pub norm: NormSpec,
    pub reward_weights: RewardWeights,
    kind: PolicyKind,
    critic: Critic,
    critic2: Option<Critic>,
    experience: ExperiencePool,
    rng: ChaCha8Rng,
    env_steps: u64,
    critic_updates: u64,
    episode: u64,
}

impl Agent {
    pub fn new(variant: AgentVariant, setup: &AgentSetup, seed: u64) -> Self {
        let norm = NormSpec::new(&setup.arena, &setup.sim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let critic = Critic::new(&setup.agent.critic_hidden, setup.agent.critic_lr, &mut rng);
        let critic2 = match variant {
            AgentVariant::Td3 => Some(Critic::new(
                &setup.agent.critic_hidden,
                setup.agent.critic_lr,
                &mut rng,
            )),
            _ => None,
        };
        let kind = match variant {
            AgentVariant::Proposed => PolicyKind::Proposed {
                model: DynamicsModel::new(setup.dynamics, rng.random()),
                oracle: None,
                planner: MpcPolicy::new(setup.mpc, setup.reward, setup.sim, norm),
                history: HistoryBuffer::new(setup.dynamics.history_len),
                windows: WindowBuffer::new(setup.agent.experience_capacity),
                predicting: PredictingPool::new(setup.agent.predicting_capacity),
                prev_action: [0.0, 0.0],
                warm_started: false,
            },
            AgentVariant::Ddpg | AgentVariant::Td3 => PolicyKind::Baseline {
                actor: MlpActor::new(&setup.agent.actor_hidden, setup.agent.actor_lr, &mut rng),
            },
        };
        Agent {
            variant,
            cfg: setup.agent.clone(),
            sim: setup.sim,
            arena: setup.arena,
            norm,
            reward_weights: setup.reward,
            kind,
            critic,
            critic2,
            experience: ExperiencePool::new(setup.agent.experience_capacity),
            rng,
            env_steps: 0,
            critic_updates: 0,
            episode: 0,
        }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn episode_count(&self) -> u64 {
        self.episode
    }

    pub fn set_episode_count(&mut self, n: u64) {
        self.episode = n;
    }

    pub fn experience_len(&self) -> usize {
        self.experience.len()
    }

    pub fn experience(&self) -> &ExperiencePool {
        &self.experience
    }

    /// Swap the planner onto the simulator's own update law.
    pub fn use_oracle_model(&mut self, enable: bool) {
        if let PolicyKind::Proposed { oracle, .. } = &mut self.kind {
            *oracle = if enable {
                Some(KinematicModel {
                    sim: self.sim,
                    norm: self.norm,
                })
            } else {
                None
            };
        }
    }

    pub fn dynamics_model(&self) -> Option<&DynamicsModel> {
        match &self.kind {
            PolicyKind::Proposed { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn dynamics_model_mut(&mut self) -> Option<&mut DynamicsModel> {
        match &mut self.kind {
            PolicyKind::Proposed { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn predicting_pool(&self) -> Option<&PredictingPool> {
        match &self.kind {
            PolicyKind::Proposed { predicting, .. } => Some(predicting),
            _ => None,
        }
    }

    pub fn window_buffer_len(&self) -> usize {
        match &self.kind {
            PolicyKind::Proposed { windows, .. } => windows.len(),
            _ => 0,
        }
    }

    pub fn window_at(&self, idx: usize) -> TrajectoryWindow {
        match &self.kind {
            PolicyKind::Proposed { windows, .. } => windows.get(idx).clone(),
            _ => panic!("baseline agents keep no window buffer"),
        }
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn critic_params_mut(&mut self) -> &mut ParamVector {
        &mut self.critic.params
    }

    pub fn actor(&self) -> Option<&MlpActor> {
        match &self.kind {
            PolicyKind::Baseline { actor } => Some(actor),
            _ => None,
        }
    }

    pub fn actor_mut(&mut self) -> Option<&mut MlpActor> {
        match &mut self.kind {
            PolicyKind::Baseline { actor } => Some(actor),
            _ => None,
        }
    }

    fn gaussian(&mut self, std: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        std * z
    }

    /// Deterministic policy output plus optional exploration noise.
    pub fn select_action(&mut self, obs: &Observation, explore: bool) -> (Action, Option<MpcPlan>) {
        let (clean, plan) = match &mut self.kind {
            PolicyKind::Proposed {
                model,
                oracle,
                planner,
                history,
                prev_action,
                ..
            } => {
                let req = SolveRequest {
                    state: obs.state,
                    norm_state: obs.norm_state,
                    history: history.padded(),
                    prev_action: *prev_action,
                    belief: WorldBelief::from_scan(&obs.uav, &obs.state.lidar, &self.sim),
                    target: obs.target,
                };
                let seed = self.rng.random();
                let backend: &dyn TransitionModel = match oracle {
                    Some(o) => &*o,
                    None => &*model,
                };
                let plan = planner.solve(backend, &req, seed);
                (plan.act(), Some(plan))
            }
            PolicyKind::Baseline { actor } => {
                let a = actor.act(&obs.norm_state);
                (Action::new(a[0], a[1]), None)
            }
        };
        let action = if explore {
            let std = self.cfg.explore_noise_std;
            Action::new(
                clean.speed_ratio + self.gaussian(std),
                clean.steering + self.gaussian(std),
            )
        } else {
            clean
        };
        (action, plan)
    }

    /// Append a plan's H predicted transitions to the predicting pool.
    /// `step` is the episode step about to be executed, so stage j predicts
    /// step + j.
    pub fn fill_predicting_pool(&mut self, plan: &MpcPlan, current: &NormState, step: usize) -> usize {
        let episode = self.episode;
        if let PolicyKind::Proposed { predicting, .. } = &mut self.kind {
            let h = plan.actions.len();
            for j in 0..h {
                let state = if j == 0 { *current } else { plan.predicted_norm[j - 1] };
                predicting.push(PredictedTransition {
                    state,
                    action: plan.actions[j].to_array(),
                    reward: plan.stage_rewards[j],
                    next_state: plan.predicted_norm[j],
                    next_action: plan.actions.get(j + 1).map(|a| a.to_array()),
                    w_rel: 1.0,
                    episode,
                    predicted_step: step + j,
                });
            }
            h
        } else {
            0
        }
    }

    /// One TD update of the critic(s) from the experience pool, mixed with
    /// reliability-weighted predicted samples. Skipped while the pool is
    /// smaller than the batch. Returns the pre-update loss.
    pub fn critic_update(&mut self) -> Option<f64> {
        let n_real = self.cfg.batch_size;
        if self.experience.len() < n_real {
            return None;
        }
        let real_idx = self.experience.sample_indices(&mut self.rng, n_real);
        let n_pred_wanted = (self.cfg.mix_fraction * n_real as f64).ceil() as usize;
        let pred_idx: Vec<usize> = match (&self.kind, n_pred_wanted) {
            (PolicyKind::Proposed { predicting, .. }, n) if n > 0 && !predicting.is_empty() => {
                predicting.weighted_sample(&mut self.rng, n)
            }
            _ => Vec::new(),
        };
        let gamma = self.cfg.gamma;
        let n_pred = pred_idx.len();
        let total = (n_real + n_pred) as f64;
        let real_w = total / n_real as f64;
        let mut samples: Vec<TdSample> = Vec::with_capacity(n_real + n_pred);
        for &i in &real_idx {
            let t = self.experience.get(i).clone();
            let bootstrap = if t.done {
                0.0
            } else {
                let a_next = self.bootstrap_action(&t.next_state, &t);
                match (&self.critic2, self.variant) {
                    (Some(c2), AgentVariant::Td3) => self
                        .critic
                        .q_target(&t.next_state, &a_next)
                        .min(c2.q_target(&t.next_state, &a_next)),
                    _ => self.critic.q_target(&t.next_state, &a_next),
                }
            };
            samples.push(TdSample {
                state: t.state,
                action: t.action,
                y: t.reward + gamma * bootstrap,
                weight: real_w,
            });
        }
        if n_pred > 0 {
            let pred_w_scale = total / n_pred as f64;
            if let PolicyKind::Proposed { predicting, .. } = &self.kind {
                for &i in &pred_idx {
                    let t = predicting.get(i);
                    let a_next = t.next_action.unwrap_or(t.action);
                    let y = t.reward + gamma * self.critic.q_target(&t.next_state, &a_next);
                    samples.push(TdSample {
                        state: t.state,
                        action: t.action,
                        y,
                        weight: t.w_rel * pred_w_scale,
                    });
                }
            }
        }
        let loss = self.critic.td_step(&samples);
        if let Some(c2) = &mut self.critic2 {
            c2.td_step(&samples);
        }
        self.critic_updates += 1;
        if self.variant != AgentVariant::Td3 {
            self.critic.soft_update_target(self.cfg.tau);
        }
        Some(loss)
    }

    /// Bootstrap action at the next state: target actor for the baselines
    /// (with smoothing noise for the twin-critic variant), the stored
    /// on-policy next action for the planner agent.
    fn bootstrap_action(&mut self, next_state: &NormState, t: &Transition) -> ActionArray {
        match &self.kind {
            PolicyKind::Baseline { actor } => {
                let mut a = actor.act_target(next_state);
                if self.variant == AgentVariant::Td3 {
                    let clip = self.cfg.td3_noise_clip;
                    let std = self.cfg.td3_policy_noise;
                    for v in &mut a {
                        let z: f64 = StandardNormal.sample(&mut self.rng);
                        *v = (*v + (std * z).clamp(-clip, clip)).clamp(-1.0, 1.0);
                    }
                }
                a
            }
            PolicyKind::Proposed { .. } => t.next_action.unwrap_or(t.action),
        }
    }

    /// Policy improvement: deterministic policy gradient through the critic
    /// for the baselines; a supervised dynamics-model step for the planner
    /// agent (the planner improves because its model does).
    /// Gradient of the baseline policy loss `-mean Q(s, mu(s))` with respect
    /// to the actor parameters, over the given states.
    pub fn baseline_actor_loss_gradient(&self, states: &[NormState]) -> Option<ParamVector> {
        let actor = match &self.kind {
            PolicyKind::Baseline { actor } => actor,
            _ => return None,
        };
        let n = states.len() as f64;
        let mut actor_grads = actor.params.zeros_like();
        let mut critic_scratch = self.critic.params.zeros_like();
        for s in states {
            let a_cache = forward_mlp_cached(&actor.spec, &actor.params, s)
                .expect("actor input width is fixed");
            let a = a_cache.output();
            let mut qin = Vec::with_capacity(crate::mdp::STATE_DIM + 2);
            qin.extend_from_slice(s);
            qin.extend_from_slice(a);
            let q_cache = forward_mlp_cached(&self.critic.spec, &self.critic.params, &qin)
                .expect("critic input width is fixed");
            // Ascend mean Q: loss is -mean Q, so dQ = -1/n.
            let d_in = backward_mlp(
                &self.critic.spec,
                &self.critic.params,
                &q_cache,
                &[-1.0 / n],
                &mut critic_scratch,
            );
            let d_action = &d_in[crate::mdp::STATE_DIM..];
            backward_mlp(&actor.spec, &actor.params, &a_cache, d_action, &mut actor_grads);
        }
        Some(actor_grads)
    }

    pub fn actor_update(&mut self) {
        if matches!(self.kind, PolicyKind::Proposed { .. }) {
            self.model_update();
            return;
        }
        if self.experience.len() < self.cfg.batch_size {
            return;
        }
        let idx = self.experience.sample_indices(&mut self.rng, self.cfg.batch_size);
        let states: Vec<NormState> = idx.iter().map(|&i| self.experience.get(i).state).collect();
        let actor_grads = self
            .baseline_actor_loss_gradient(&states)
            .expect("baseline agent has an actor");
        match &mut self.kind {
            PolicyKind::Baseline { actor } => {
                actor.opt.step(&mut actor.params, &actor_grads);
                if self.variant == AgentVariant::Td3 {
                    // Delayed target refresh for actor and both critics.
                    soft_update(&mut actor.target, &actor.params, self.cfg.tau);
                    self.critic.soft_update_target(self.cfg.tau);
                    if let Some(c2) = &mut self.critic2 {
                        c2.soft_update_target(self.cfg.tau);
                    }
                } else {
                    soft_update(&mut actor.target, &actor.params, self.cfg.tau);
                }
            }
            PolicyKind::Proposed { .. } => unreachable!(),
        }
    }

    /// One supervised model step on realized windows.
    pub fn model_update(&mut self) {
        let batch = self.cfg.model_batch.max(1);
        if let PolicyKind::Proposed { model, windows, .. } = &mut self.kind {
            if windows.len() < batch {
                return;
            }
            let mut picked = Vec::with_capacity(batch);
            for _ in 0..batch {
                let i = self.rng.random_range(0..windows.len());
                picked.push(windows.get(i).clone());
            }
            model.train_on_batch(&picked);
        }
    }

    /// Warm-start the critic from the predicting pool when due. Runs once
    /// after the pool first reaches the configured size, or after every
    /// episode when the per-episode switch is on.
    pub fn maybe_warm_start(&mut self) -> bool {
        let due = match &self.kind {
            PolicyKind::Proposed {
                predicting,
                warm_started,
                ..
            } => {
                predicting.len() >= self.cfg.warm_start_min_pool
                    && (!*warm_started || self.cfg.warm_start_per_episode)
            }
            _ => false,
        };
        if !due {
            return false;
        }
        let (pool, steps) = match &self.kind {
            PolicyKind::Proposed { predicting, .. } => {
                (predicting.clone(), self.cfg.warm_start_steps)
            }
            _ => unreachable!(),
        };
        warm_start_critic(
            &mut self.critic,
            &pool,
            steps,
            self.cfg.gamma,
            self.cfg.tau,
            self.cfg.batch_size.min(pool.len()).max(1),
            &mut self.rng,
        );
        if let PolicyKind::Proposed { warm_started, .. } = &mut self.kind {
            *warm_started = true;
        }
        true
    }

    /// Full interaction loop for one episode. `explore` adds action noise;
    /// `learn` enables pool writes and per-step updates.
    pub fn run_episode(
        &mut self,
        world: &mut World,
        explore: bool,
        learn: bool,
    ) -> (Vec<TraceStep>, EpisodeResult) {
        self.episode += 1;
        if let PolicyKind::Proposed {
            history,
            prev_action,
            ..
        } = &mut self.kind
        {
            history.clear();
            *prev_action = [0.0, 0.0];
        }
        let start_bearing = {
            let d = world.target - world.start;
            d.y.atan2(d.x)
        };
        let mut uav = UavKinematicState::from_pose(world.start, start_bearing, 0.0);
        let mut scan = lidar_scan(&uav, world, &self.sim);
        let mut state = build_state(&uav, world, scan);
        let mut norm_state = self.norm.normalize(&state);
        let mut trace = Vec::new();
        let mut cumulative = 0.0;
        let mut outcome = StepOutcome::Running;
        let mut step = 0usize;
        while outcome == StepOutcome::Running {
            step += 1;
            let obs = Observation {
                uav,
                state,
                norm_state,
                target: world.target,
            };
            let (action, plan) = self.select_action(&obs, explore);
            if learn {
                if let Some(plan) = &plan {
                    self.fill_predicting_pool(plan, &norm_state, step);
                }
            }
            let d_prev = state.rel_target.norm();
            step_obstacles(world, self.sim.dt);
            uav = step_kinematics(&uav, action, &self.sim);
            scan = lidar_scan(&uav, world, &self.sim);
            outcome = classify_step(world, &uav, step, &self.sim);
            let next_state = build_state(&uav, world, scan);
            let next_norm = self.norm.normalize(&next_state);
            let d_min = nearest_obstacle_distance(uav.position, world);
            let breakdown = total_reward(
                &RewardInputs {
                    d_prev,
                    d_curr: next_state.rel_target.norm(),
                    yaw_err: bearing_error(uav.position, uav.yaw, world.target),
                    d_min,
                    status: outcome,
                },
                &self.reward_weights,
                &self.sim,
            );
            cumulative += breakdown.total;
            // Timeouts are truncations, not environment terminals: the value
            // of the final state still bootstraps.
            let done = matches!(outcome, StepOutcome::ReachedTarget | StepOutcome::Collision);
            if learn {
                self.experience.push(
                    Transition {
                        state: norm_state,
                        action: action.to_array(),
                        reward: breakdown.total,
                        next_state: next_norm,
                        done,
                        next_action: None,
                    },
                    step > 1,
                );
                let episode = self.episode;
                let sigma = self.cfg.sigma_rel;
                if let PolicyKind::Proposed {
                    history,
                    windows,
                    predicting,
                    ..
                } = &mut self.kind
                {
                    predicting.update_reliability(episode, step, &next_norm, sigma);
                    windows.push(history.window(norm_state, action.to_array(), next_norm));
                }
            }
            if let PolicyKind::Proposed {
                history,
                prev_action,
                ..
            } = &mut self.kind
            {
                history.push(norm_state, action.to_array());
                *prev_action = action.to_array();
            }
            self.env_steps += 1;
            if learn && self.experience.len() >= self.cfg.warmup_transitions {
                self.critic_update();
                match self.variant {
                    AgentVariant::Td3 => {
                        if self.critic_updates % self.cfg.td3_policy_delay as u64 == 0 {
                            self.actor_update();
                        }
                    }
                    _ => self.actor_update(),
                }
            }
            trace.push(TraceStep {
                step,
                x: uav.position.x,
                y: uav.position.y,
                psi: uav.yaw,
                v: uav.speed,
                action: action.to_array(),
                reward: breakdown,
                lidar: scan,
                status: outcome,
            });
            state = next_state;
            norm_state = next_norm;
        }
        (
            trace,
            EpisodeResult {
                outcome,
                cumulative_reward: cumulative,
                steps: step,
            },
        )
    }

    /// Write `{actor|critic|model|targets}` parameter files plus a manifest.
    pub fn save_checkpoint(&self, dir: &Path, config_hash: &str) -> Result<(), AgentError> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut save = |name: &str, params: &ParamVector| -> Result<(), AgentError> {
            save_params(params, &dir.join(name))?;
            files.push(name.to_string());
            Ok(())
        };
        save("critic.params", &self.critic.params)?;
        save("critic_target.params", &self.critic.target)?;
        if let Some(c2) = &self.critic2 {
            save("critic2.params", &c2.params)?;
            save("critic2_target.params", &c2.target)?;
        }
        match &self.kind {
            PolicyKind::Proposed { model, .. } => {
                save("model.params", &model.params)?;
            }
            PolicyKind::Baseline { actor } => {
                save("actor.params", &actor.params)?;
                save("actor_target.params", &actor.target)?;
            }
        }
        let manifest = serde_json::json!({
            "version": 1,
            "variant": self.variant.to_string(),
            "config_hash": config_hash,
            "episode": self.episode,
            "files": files,
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap())?;
        Ok(())
    }

    /// Rebuild an agent from a checkpoint directory. The setup must match the
    /// one the checkpoint was trained with; the manifest hash is checked when
    /// provided.
    pub fn load_checkpoint(
        variant: AgentVariant,
        setup: &AgentSetup,
        dir: &Path,
        expected_hash: Option<&str>,
        seed: u64,
    ) -> Result<Agent, AgentError> {
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
                .map_err(|e| AgentError::Checkpoint(format!("bad manifest: {e}")))?;
        let stored_variant = manifest["variant"].as_str().unwrap_or_default();
        if stored_variant != variant.to_string() {
            return Err(AgentError::Checkpoint(format!(
                "checkpoint holds a '{stored_variant}' agent, requested '{variant}'"
            )));
        }
        if let Some(expect) = expected_hash {
            let stored = manifest["config_hash"].as_str().unwrap_or_default();
            if stored != expect {
                return Err(AgentError::Checkpoint(format!(
                    "config hash mismatch: checkpoint {stored}, current {expect}"
                )));
            }
        }
        let mut agent = Agent::new(variant, setup, seed);
        let load_into = |name: &str, into: &mut ParamVector| -> Result<(), AgentError> {
            let loaded = load_params(&dir.join(name))?;
            validate_layout(&loaded, into)?;
            *into = loaded;
            Ok(())
        };
        load_into("critic.params", &mut agent.critic.params)?;
        load_into("critic_target.params", &mut agent.critic.target)?;
        if let Some(c2) = &mut agent.critic2 {
            load_into("critic2.params", &mut c2.params)?;
            load_into("critic2_target.params", &mut c2.target)?;
        }
        match &mut agent.kind {
            PolicyKind::Proposed { model, .. } => {
                let loaded = load_params(&dir.join("model.params"))?;
                validate_layout(&loaded, &model.params)?;
                model
                    .set_params(loaded)
                    .map_err(AgentError::Nn)?;
            }
            PolicyKind::Baseline { actor } => {
                load_into("actor.params", &mut actor.params)?;
                load_into("actor_target.params", &mut actor.target)?;
            }
        }
        agent.episode = manifest["episode"].as_u64().unwrap_or(0);
        Ok(agent)
    }

    /// Pretrain the dynamics model from obstacle-free flight in a seed world
    /// spawned from the agent's arena (no-op for the baselines). Returns the
    /// final training loss when it ran.
    pub fn pretrain_model(&mut self, episodes: usize, steps_per_episode: usize, seed: u64) -> Option<f64> {
        let spec = crate::sim::ScenarioSpec {
            arena: self.arena,
            obstacles: vec![],
            start_corner: None,
            target_corner: None,
            seed,
            dynamic_velocity: 0.0,
        };
        let sim = self.sim;
        let world = crate::sim::spawn_scenario(&spec, &sim).expect("empty world always spawns");
        self.dynamics_model_mut().map(|m| {
            m.pretrain_from_limited_map(&world, &sim, episodes, steps_per_episode, seed)
        })
    }
}
