//! LSTM one-step transition model over recent (state, action) history.
//!
//! The network consumes normalized `[state | action]` pairs and predicts the
//! normalized state increment. Rollouts keep the recurrent state from the
//! history burn-in and feed each prediction back, so a horizon-1 rollout is
//! bitwise identical to `predict_next`.

use crate::mdp::{ACTION_DIM, STATE_DIM};
use crate::nn::{
    backward_lstm, forward_lstm_cached, lstm_step, AdamState, HiddenState, LstmSpec, NnError,
    OptimizerConfig, ParamVector,
};
use crate::sim::{SimConfig, World};
use rand::{Rng, RngExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Network input width: state, action, the yaw encoded as cos/sin (angles
/// go to networks in their circular embedding), and the commanded-velocity
/// basis `a_v * (cos, sin)(yaw)`.
pub const MODEL_INPUT_DIM: usize = STATE_DIM + ACTION_DIM + 4;

pub type NormState = [f64; STATE_DIM];
pub type ActionArray = [f64; ACTION_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynConfig {
    /// Window length L: pairs of (state, action) the model conditions on.
    pub history_len: usize,
    pub lstm_layers: usize,
    pub lstm_units: usize,
    /// Width of the rectified readout layer (0 = linear readout).
    pub readout_hidden: usize,
    pub optimizer: OptimizerConfig,
    /// Predict the state increment rather than the absolute next state.
    pub predict_delta: bool,
    /// Mini-batch size for epoch training (pretraining, offline fits).
    pub batch_size: usize,
    /// Gaussian noise added to window inputs during epoch training; smooths
    /// the fit around lidar discontinuities.
    pub train_input_noise: f64,
}

impl Default for DynConfig {
    fn default() -> Self {
        DynConfig {
            history_len: 5,
            lstm_layers: 3,
            lstm_units: 200,
            readout_hidden: 64,
            optimizer: OptimizerConfig {
                learning_rate: 0.01,
                max_epochs: 100,
                grad_clip: Some(5.0),
                lr_decay: 0.95,
                ..OptimizerConfig::default()
            },
            predict_delta: true,
            batch_size: 64,
            train_input_noise: 0.05,
        }
    }
}

impl DynConfig {
    /// Reduced network for desk-scale experiments.
    pub fn desk_scale() -> Self {
        DynConfig {
            lstm_layers: 2,
            lstm_units: 64,
            ..DynConfig::default()
        }
    }

    pub fn lstm_spec(&self) -> LstmSpec {
        // The first six components (target offset, velocity, speed, yaw)
        // follow from the current state and action alone; the lidar
        // components need the recurrent context.
        LstmSpec::new(MODEL_INPUT_DIM, self.lstm_layers, self.lstm_units, STATE_DIM)
            .with_readout_hidden(self.readout_hidden)
            .with_memoryless_outputs(if self.readout_hidden > 0 { 6 } else { 0 })
    }
}

/// L contiguous (normalized state, action) pairs and the realized next state.
/// Episode starts are zero-padded at the front; no terminal transition sits
/// inside the pair sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryWindow {
    pub steps: Vec<(NormState, ActionArray)>,
    pub next_state: NormState,
}

/// Rolling per-episode history of the most recent L-1 pairs, zero-padded.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    len: usize,
    pairs: std::collections::VecDeque<(NormState, ActionArray)>,
}

impl HistoryBuffer {
    /// `history_len` is the model's L; the buffer keeps L-1 past pairs.
    pub fn new(history_len: usize) -> Self {
        assert!(history_len >= 1);
        HistoryBuffer {
            len: history_len - 1,
            pairs: std::collections::VecDeque::with_capacity(history_len),
        }
    }

    pub fn push(&mut self, state: NormState, action: ActionArray) {
        if self.len == 0 {
            return;
        }
        if self.pairs.len() == self.len {
            self.pairs.pop_front();
        }
        self.pairs.push_back((state, action));
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// The past pairs, zero-padded at the front to exactly L-1 entries.
    pub fn padded(&self) -> Vec<(NormState, ActionArray)> {
        let mut out = Vec::with_capacity(self.len);
        let pad = self.len - self.pairs.len();
        for _ in 0..pad {
            out.push(([0.0; STATE_DIM], [0.0; ACTION_DIM]));
        }
        out.extend(self.pairs.iter().copied());
        out
    }

    /// A training window ending at (state, action) with the given outcome.
    pub fn window(&self, state: NormState, action: ActionArray, next: NormState) -> TrajectoryWindow {
        let mut steps = self.padded();
        steps.push((state, action));
        TrajectoryWindow {
            steps,
            next_state: next,
        }
    }
}

fn pack_input(state: &NormState, action: &ActionArray) -> Vec<f64> {
    let mut x = Vec::with_capacity(MODEL_INPUT_DIM);
    x.extend_from_slice(state);
    x.extend_from_slice(action);
    let yaw = state[5] * std::f64::consts::PI;
    x.push(yaw.cos());
    x.push(yaw.sin());
    x.push(action[0] * yaw.cos());
    x.push(action[0] * yaw.sin());
    x
}

fn clip_lidar(state: &mut NormState) {
    for v in &mut state[6..STATE_DIM] {
        *v = v.clamp(-1.0, 1.0);
    }
}

/// The learned transition model plus its optimizer state.
#[derive(Debug, Clone)]
pub struct DynamicsModel {
    pub cfg: DynConfig,
    spec: LstmSpec,
    pub params: ParamVector,
    opt: AdamState,
    /// Per-component standardization of the kinematic delta targets (the
    /// memoryless head trains on unit-scale residuals). Ones until fitted.
    target_scale: [f64; STATE_DIM],
}

impl DynamicsModel {
    pub fn new(cfg: DynConfig, seed: u64) -> Self {
        let spec = cfg.lstm_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = spec.init_params(&mut rng);
        let opt = AdamState::new(&params, cfg.optimizer);
        DynamicsModel {
            cfg,
            spec,
            params,
            opt,
            target_scale: [1.0; STATE_DIM],
        }
    }

    pub fn target_scale(&self) -> &[f64; STATE_DIM] {
        &self.target_scale
    }

    pub fn set_target_scale(&mut self, scale: [f64; STATE_DIM]) {
        self.target_scale = scale;
    }

    /// Standardize the kinematic delta targets by their dataset RMS. Only the
    /// memoryless-head components are rescaled; lidar stays in plain
    /// normalized space.
    pub fn fit_target_scale(&mut self, windows: &[TrajectoryWindow]) {
        if windows.is_empty() {
            return;
        }
        let mut acc = [0.0f64; STATE_DIM];
        for w in windows {
            let t = self.raw_target_of(w);
            for k in 0..STATE_DIM {
                acc[k] += t[k] * t[k];
            }
        }
        let kin = self.spec.memoryless_outputs;
        for k in 0..STATE_DIM {
            self.target_scale[k] = if k < kin {
                (acc[k] / windows.len() as f64).sqrt().max(1e-4)
            } else {
                1.0
            };
        }
    }

    pub fn spec(&self) -> &LstmSpec {
        &self.spec
    }

    pub fn set_params(&mut self, params: ParamVector) -> Result<(), NnError> {
        self.spec.check(&params)?;
        self.params = params;
        self.opt = AdamState::new(&self.params, self.cfg.optimizer);
        Ok(())
    }

    /// Burn the padded history (L-1 pairs) into a fresh recurrent state.
    pub fn start_rollout(&self, history: &[(NormState, ActionArray)]) -> HiddenState {
        let mut hs = HiddenState::zeros(&self.spec);
        let mut scratch = Vec::with_capacity(STATE_DIM);
        for (s, a) in history {
            lstm_step(&self.spec, &self.params, &pack_input(s, a), &mut hs, &mut scratch)
                .expect("model input width is fixed");
        }
        hs
    }

    /// Feed one (state, action) pair and return the predicted next state.
    pub fn rollout_step(
        &self,
        hs: &mut HiddenState,
        state: &NormState,
        action: &ActionArray,
    ) -> NormState {
        let mut out = Vec::with_capacity(STATE_DIM);
        lstm_step(&self.spec, &self.params, &pack_input(state, action), hs, &mut out)
            .expect("model input width is fixed");
        let mut next = [0.0; STATE_DIM];
        if self.cfg.predict_delta {
            for k in 0..STATE_DIM {
                next[k] = state[k] + out[k] * self.target_scale[k];
            }
            // Yaw lives on a circle; fold the updated angle back into
            // (-1, 1] (normalized by pi).
            next[5] = crate::geom::wrap_angle(next[5] * std::f64::consts::PI)
                / std::f64::consts::PI;
        } else {
            for k in 0..STATE_DIM {
                next[k] = out[k] * self.target_scale[k];
            }
        }
        clip_lidar(&mut next);
        next
    }

    /// One-step prediction conditioned on the padded history.
    pub fn predict_next(
        &self,
        history: &[(NormState, ActionArray)],
        state: &NormState,
        action: &ActionArray,
    ) -> NormState {
        let mut hs = self.start_rollout(history);
        self.rollout_step(&mut hs, state, action)
    }

    /// Iterated prediction over an action sequence, feeding each predicted
    /// state back as the next input.
    pub fn rollout(
        &self,
        history: &[(NormState, ActionArray)],
        state: &NormState,
        actions: &[ActionArray],
    ) -> Vec<NormState> {
        let mut hs = self.start_rollout(history);
        let mut cur = *state;
        let mut out = Vec::with_capacity(actions.len());
        for a in actions {
            cur = self.rollout_step(&mut hs, &cur, a);
            out.push(cur);
        }
        out
    }

    fn raw_target_of(&self, w: &TrajectoryWindow) -> NormState {
        let last = &w.steps[w.steps.len() - 1].0;
        let mut t = [0.0; STATE_DIM];
        for k in 0..STATE_DIM {
            t[k] = if self.cfg.predict_delta {
                w.next_state[k] - last[k]
            } else {
                w.next_state[k]
            };
        }
        if self.cfg.predict_delta {
            // Smallest signed angular difference for the yaw component.
            t[5] = crate::geom::wrap_angle(t[5] * std::f64::consts::PI)
                / std::f64::consts::PI;
        }
        t
    }

    /// Mean per-component squared prediction error over a dataset, forward
    /// passes only.
    pub fn dataset_loss(&self, windows: &[TrajectoryWindow]) -> f64 {
        assert!(!windows.is_empty(), "empty dataset");
        let mut acc = 0.0;
        for w in windows {
            let inputs: Vec<Vec<f64>> = w.steps.iter().map(|(s, a)| pack_input(s, a)).collect();
            let (outputs, _) =
                crate::nn::forward_lstm_sequence(&self.spec, &self.params, &inputs, None)
                    .expect("window inputs have fixed width");
            let pred = &outputs[outputs.len() - 1];
            let target = self.raw_target_of(w);
            for k in 0..STATE_DIM {
                let d = pred[k] * self.target_scale[k] - target[k];
                acc += d * d;
            }
        }
        acc / (windows.len() * STATE_DIM) as f64
    }

    /// One optimizer step on the batch MSE. Returns the pre-update loss.
    pub fn train_on_batch(&mut self, windows: &[TrajectoryWindow]) -> f64 {
        assert!(!windows.is_empty(), "empty batch");
        let mut grads = self.params.zeros_like();
        let mut loss = 0.0;
        let denom = (windows.len() * STATE_DIM) as f64;
        for w in windows {
            let inputs: Vec<Vec<f64>> = w.steps.iter().map(|(s, a)| pack_input(s, a)).collect();
            let cache = forward_lstm_cached(&self.spec, &self.params, &inputs, None)
                .expect("window inputs have fixed width");
            let pred = &cache.outputs()[inputs.len() - 1];
            let target = self.raw_target_of(w);
            let mut d_out = vec![0.0; STATE_DIM];
            for k in 0..STATE_DIM {
                let s = self.target_scale[k];
                let diff_scaled = pred[k] - target[k] / s;
                let diff = diff_scaled * s;
                loss += diff * diff;
                d_out[k] = 2.0 * diff_scaled / denom;
            }
            let mut d_outputs: Vec<Option<Vec<f64>>> = vec![None; inputs.len()];
            d_outputs[inputs.len() - 1] = Some(d_out);
            backward_lstm(&self.spec, &self.params, &cache, &d_outputs, &mut grads);
        }
        self.opt.step(&mut self.params, &grads);
        loss / denom
    }

    /// Epoch training over a fixed dataset with an optional fallback: if the
    /// full-dataset loss rises after an epoch, restore the snapshot and halve
    /// the learning rate, so the recorded loss curve never increases. Stops
    /// early once the loss drops below `stop_below`, if given.
    pub fn train_epochs(
        &mut self,
        windows: &[TrajectoryWindow],
        epochs: usize,
        halve_on_increase: bool,
        stop_below: Option<f64>,
        rng: &mut impl Rng,
    ) -> Vec<f64> {
        assert!(!windows.is_empty(), "empty dataset");
        if self.target_scale.iter().all(|s| *s == 1.0) {
            self.fit_target_scale(windows);
        }
        let mut losses = Vec::with_capacity(epochs + 1);
        let mut prev = self.dataset_loss(windows);
        losses.push(prev);
        let mut order: Vec<usize> = (0..windows.len()).collect();
        for _ in 0..epochs {
            if let Some(threshold) = stop_below {
                if prev < threshold {
                    break;
                }
            }
            let snapshot = (self.params.clone(), self.opt.clone());
            // Fisher-Yates with the caller's generator keeps runs replayable.
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let mut batch = Vec::with_capacity(self.cfg.batch_size);
            for chunk in order.chunks(self.cfg.batch_size.max(1)) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| windows[i].clone()));
                if self.cfg.train_input_noise > 0.0 {
                    use rand_distr::{Distribution, StandardNormal};
                    for w in &mut batch {
                        for (s, _) in &mut w.steps {
                            for v in s.iter_mut() {
                                let z: f64 = StandardNormal.sample(rng);
                                *v += self.cfg.train_input_noise * z;
                            }
                        }
                    }
                }
                self.train_on_batch(&batch);
            }
            let loss = self.dataset_loss(windows);
            if halve_on_increase && loss > prev {
                let lr = self.opt.learning_rate() / 2.0;
                self.params = snapshot.0;
                self.opt = snapshot.1;
                self.opt.set_learning_rate(lr);
                losses.push(prev);
            } else {
                prev = loss;
                losses.push(loss);
            }
            let lr = self.opt.learning_rate() * self.cfg.optimizer.lr_decay;
            self.opt.set_learning_rate(lr);
        }
        losses
    }

    /// Seed the model from limited map knowledge: random-policy episodes in
    /// the given (obstacle-light) seed world, then epoch training on the
    /// collected windows.
    pub fn pretrain_from_limited_map(
        &mut self,
        world: &World,
        sim_cfg: &SimConfig,
        episodes: usize,
        steps_per_episode: usize,
        seed: u64,
    ) -> f64 {
        if episodes == 0 {
            return f64::NAN;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let windows = collect_random_windows(
            world,
            sim_cfg,
            self.cfg.history_len,
            episodes,
            steps_per_episode,
            &mut rng,
        );
        let losses = self.train_epochs(
            &windows,
            self.cfg.optimizer.max_epochs,
            false,
            Some(1e-4),
            &mut rng,
        );
        *losses.last().unwrap()
    }
}

/// Rollout cursor: recurrent state for learned models, nothing for
/// closed-form ones.
#[derive(Debug, Clone)]
pub enum RolloutCursor {
    Recurrent(HiddenState),
    Stateless,
}

/// One-step transition predictor the planner can roll forward from a history
/// burn-in.
pub trait TransitionModel: Sync {
    fn begin(&self, history: &[(NormState, ActionArray)]) -> RolloutCursor;
    fn advance(
        &self,
        cursor: &mut RolloutCursor,
        state: &NormState,
        action: &ActionArray,
    ) -> NormState;
}

impl TransitionModel for DynamicsModel {
    fn begin(&self, history: &[(NormState, ActionArray)]) -> RolloutCursor {
        RolloutCursor::Recurrent(self.start_rollout(history))
    }

    fn advance(
        &self,
        cursor: &mut RolloutCursor,
        state: &NormState,
        action: &ActionArray,
    ) -> NormState {
        match cursor {
            RolloutCursor::Recurrent(hs) => self.rollout_step(hs, state, action),
            RolloutCursor::Stateless => panic!("learned model needs a recurrent cursor"),
        }
    }
}

/// The simulator's own update law used as a transition model: exact planar
/// kinematics on the relative-target coordinates, with lidar held at its last
/// reading. Useful as a best-case model for diagnostics.
#[derive(Debug, Clone)]
pub struct KinematicModel {
    pub sim: SimConfig,
    pub norm: crate::mdp::NormSpec,
}

impl TransitionModel for KinematicModel {
    fn begin(&self, _history: &[(NormState, ActionArray)]) -> RolloutCursor {
        RolloutCursor::Stateless
    }

    fn advance(
        &self,
        _cursor: &mut RolloutCursor,
        state: &NormState,
        action: &ActionArray,
    ) -> NormState {
        use crate::geom::{wrap_angle, Vec2};
        let raw = self.norm.denormalize(state);
        let speed = action[0].clamp(-1.0, 1.0) * self.sim.v_max;
        let max_turn = self.sim.yaw_rate_max * self.sim.dt;
        let turn = (action[1].clamp(-1.0, 1.0) * max_turn).clamp(-max_turn, max_turn);
        let yaw = wrap_angle(raw.yaw + turn);
        let vel = Vec2::new(speed * yaw.cos(), speed * yaw.sin());
        let next = crate::mdp::StateVector {
            rel_target: raw.rel_target - vel * self.sim.dt,
            vel,
            speed,
            yaw,
            lidar: raw.lidar,
        };
        self.norm.normalize(&next)
    }
}

/// Random-policy flight data in a fixed seed world: episodes vary only in
/// their random start pose and actions.
pub fn collect_random_windows(
    world: &World,
    sim_cfg: &SimConfig,
    history_len: usize,
    episodes: usize,
    steps_per_episode: usize,
    rng: &mut impl Rng,
) -> Vec<TrajectoryWindow> {
    use crate::mdp::{build_state, Action, NormSpec};
    use crate::sim::{classify_step, lidar_scan, step_kinematics, UavKinematicState};
    let arena = world.arena;
    let norm = NormSpec::new(&arena, sim_cfg);
    let mut windows = Vec::new();
    for _ in 0..episodes {
        let margin = sim_cfg.uav_radius + 1.0;
        let mut uav = UavKinematicState::from_pose(
            crate::geom::Vec2::new(
                rng.random_range(margin..arena.width - margin),
                rng.random_range(margin..arena.depth - margin),
            ),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            0.0,
        );
        let mut history = HistoryBuffer::new(history_len);
        let mut state = norm.normalize(&build_state(&uav, world, lidar_scan(&uav, world, sim_cfg)));
        for step in 1..=steps_per_episode {
            let action = Action::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let a = action.to_array();
            uav = step_kinematics(&uav, action, sim_cfg);
            let next =
                norm.normalize(&build_state(&uav, world, lidar_scan(&uav, world, sim_cfg)));
            windows.push(history.window(state, a, next));
            history.push(state, a);
            state = next;
            if classify_step(world, &uav, step, sim_cfg).is_terminal() {
                break;
            }
        }
    }
    windows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> DynConfig {
        DynConfig {
            history_len: 3,
            lstm_layers: 1,
            lstm_units: 16,
            batch_size: 16,
            ..DynConfig::default()
        }
    }

    fn zero_history(cfg: &DynConfig) -> Vec<(NormState, ActionArray)> {
        vec![([0.0; STATE_DIM], [0.0; ACTION_DIM]); cfg.history_len - 1]
    }

    #[test]
    fn zero_weight_delta_model_predicts_identity() {
        let cfg = tiny_cfg();
        let mut model = DynamicsModel::new(cfg, 0);
        model.params.fill(0.0);
        let mut s = [0.0; STATE_DIM];
        s[0] = 0.3;
        s[6] = 0.5;
        let next = model.predict_next(&zero_history(&cfg), &s, &[1.0, -1.0]);
        assert_eq!(next, s);
    }

    #[test]
    fn rollout_horizon_one_is_predict_next() {
        let cfg = tiny_cfg();
        let model = DynamicsModel::new(cfg, 7);
        let mut s = [0.1; STATE_DIM];
        s[5] = -0.4;
        let hist = zero_history(&cfg);
        let a = [0.5, 0.25];
        let single = model.predict_next(&hist, &s, &a);
        let rolled = model.rollout(&hist, &s, &[a]);
        assert_eq!(rolled.len(), 1);
        assert_eq!(rolled[0], single);
    }

    #[test]
    fn zero_model_rollout_is_constant() {
        let cfg = tiny_cfg();
        let mut model = DynamicsModel::new(cfg, 0);
        model.params.fill(0.0);
        let s = [0.2; STATE_DIM];
        let states = model.rollout(&zero_history(&cfg), &s, &[[0.0, 0.0]; 5]);
        for st in states {
            assert_eq!(st, s);
        }
    }

    #[test]
    fn prediction_is_pure() {
        let cfg = tiny_cfg();
        let model = DynamicsModel::new(cfg, 3);
        let s = [0.05; STATE_DIM];
        let hist = zero_history(&cfg);
        let a = [0.9, -0.2];
        assert_eq!(
            model.predict_next(&hist, &s, &a),
            model.predict_next(&hist, &s, &a)
        );
    }

    #[test]
    fn lidar_components_are_clipped() {
        let cfg = tiny_cfg();
        let mut model = DynamicsModel::new(cfg, 9);
        for v in model.params.values_mut() {
            *v = 10.0;
        }
        let s = [0.9; STATE_DIM];
        let next = model.predict_next(&zero_history(&cfg), &s, &[1.0, 1.0]);
        for v in &next[6..STATE_DIM] {
            assert!(*v >= -1.0 && *v <= 1.0);
        }
    }

    #[test]
    fn synthetic_linear_dynamics_loss_decreases() {
        // s' = s + 0.1 * a on the first two components.
        let cfg = tiny_cfg();
        let mut model = DynamicsModel::new(cfg, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut windows = Vec::new();
        for _ in 0..64 {
            let mut s = [0.0; STATE_DIM];
            s[0] = rng.random_range(-0.5..0.5);
            s[1] = rng.random_range(-0.5..0.5);
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let mut next = s;
            next[0] += 0.1 * a[0];
            next[1] += 0.1 * a[1];
            windows.push(TrajectoryWindow {
                steps: vec![(s, a); cfg.history_len],
                next_state: next,
            });
        }
        let losses = model.train_epochs(&windows, 10, true, None, &mut rng);
        assert!(losses.last().unwrap() < &losses[0]);
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "loss increased: {pair:?}");
        }
    }

    fn seed_world(side: f64) -> World {
        let spec = crate::sim::ScenarioSpec {
            arena: crate::sim::ArenaConfig {
                width: side,
                depth: side,
                height: 50.0,
            },
            obstacles: vec![],
            start_corner: None,
            target_corner: None,
            seed: 3,
            dynamic_velocity: 0.0,
        };
        crate::sim::spawn_scenario(&spec, &SimConfig::default()).unwrap()
    }

    #[test]
    fn pretrain_zero_episodes_is_identity() {
        let cfg = tiny_cfg();
        let mut model = DynamicsModel::new(cfg, 4);
        let before = model.params.clone();
        model.pretrain_from_limited_map(&seed_world(60.0), &SimConfig::default(), 0, 40, 1);
        assert_eq!(model.params, before);
    }

    #[test]
    fn pretrain_is_seed_deterministic() {
        let world = seed_world(60.0);
        let sim = SimConfig::default();
        let mut a = DynamicsModel::new(tiny_cfg(), 2);
        let mut b = DynamicsModel::new(tiny_cfg(), 2);
        a.pretrain_from_limited_map(&world, &sim, 2, 30, 77);
        b.pretrain_from_limited_map(&world, &sim, 2, 30, 77);
        assert_eq!(a.params, b.params);
    }
}
