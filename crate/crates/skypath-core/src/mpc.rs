//! Receding-horizon planner over learned-model rollouts.
//!
//! Each solve samples action sequences from a diagonal Gaussian, scores them
//! with tracking + control-effort + collision stage costs minus the predicted
//! shaped rewards, and refits the sampler to the elite set. The first action
//! of the best-ever sequence is the policy output.
//!
//! The planner never sees the true map: its collision belief is the set of
//! latest lidar hit points, so obstacle and wall proximity are penalized
//! through `exp(-d / lambda)`, which grows toward 1 as the distance shrinks.

use crate::dynamics::{ActionArray, NormState, TransitionModel};
use crate::geom::Vec2;
use crate::mdp::{total_reward, Action, NormSpec, RewardInputs, RewardWeights, StateVector};
use crate::sim::{SimConfig, StepOutcome, UavKinematicState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    pub horizon: usize,
    /// Planner time step; equal to the simulator step so one stage is one step.
    pub dt: f64,
    /// Weight on squared (position, velocity) error to the desired state,
    /// which is the target point at rest.
    pub track_weight: f64,
    /// Weight on the squared action increment between stages.
    pub effort_weight: f64,
    /// Weight on the exponential collision cost.
    pub collision_weight: f64,
    /// Uniform per-stage weight on the predicted reward term.
    pub reward_weight: f64,
    /// Collision cost length scale, in meters.
    pub lambda: f64,
    pub population: usize,
    pub elite_frac: f64,
    pub iterations: usize,
    pub init_std: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            horizon: 5,
            dt: 0.5,
            track_weight: 0.01,
            effort_weight: 0.05,
            collision_weight: 400.0,
            reward_weight: 1.0,
            lambda: 1.5,
            population: 64,
            elite_frac: 0.125,
            iterations: 4,
            init_std: 0.5,
        }
    }
}

impl MpcConfig {
    pub fn elites(&self) -> usize {
        ((self.population as f64 * self.elite_frac).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.horizon < 1 {
            return Err("mpc horizon must be at least 1".into());
        }
        if self.population < 1 || self.elites() > self.population {
            return Err("mpc population must be at least the elite count".into());
        }
        for (name, v) in [
            ("track_weight", self.track_weight),
            ("effort_weight", self.effort_weight),
            ("collision_weight", self.collision_weight),
            ("reward_weight", self.reward_weight),
        ] {
            if v < 0.0 {
                return Err(format!("mpc {name} must be non-negative"));
            }
        }
        if self.lambda <= 0.0 || self.init_std <= 0.0 {
            return Err("mpc lambda and init_std must be positive".into());
        }
        Ok(())
    }
}

/// Obstacle evidence available to the planner: the latest lidar hit points.
#[derive(Debug, Clone, Default)]
pub struct WorldBelief {
    pub points: Vec<Vec2>,
}

impl WorldBelief {
    /// Hit points from a scan: ray endpoints that returned before the sensor
    /// range are surfaces (obstacles or walls).
    pub fn from_scan(uav: &UavKinematicState, scan: &[f64; 7], cfg: &SimConfig) -> Self {
        let mut points = Vec::new();
        for (offset, d) in crate::sim::LIDAR_OFFSETS.iter().zip(scan) {
            if *d < cfg.sensor_range {
                points.push(uav.position + Vec2::from_angle(uav.yaw + offset) * *d);
            }
        }
        WorldBelief { points }
    }

    /// Distance to the closest believed obstacle point; infinite when empty.
    pub fn distance(&self, q: Vec2) -> f64 {
        self.points
            .iter()
            .map(|p| p.distance(q))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Exponential proximity cost in (0, 1], rising to 1 as the distance to the
/// nearest believed obstacle drops to zero.
pub fn collision_cost(q: Vec2, belief: &WorldBelief, lambda: f64) -> f64 {
    (-belief.distance(q) / lambda).exp()
}

/// One stage of the planning objective: squared tracking error to the target
/// at rest, squared action increment, and the collision term.
pub fn stage_cost(
    pred: &StateVector,
    prev_action: &ActionArray,
    action: &ActionArray,
    belief: &WorldBelief,
    target: Vec2,
    cfg: &MpcConfig,
) -> f64 {
    let track = pred.rel_target.dot(pred.rel_target) + pred.vel.dot(pred.vel);
    let du0 = action[0] - prev_action[0];
    let du1 = action[1] - prev_action[1];
    let effort = du0 * du0 + du1 * du1;
    let q = target - pred.rel_target;
    let collision = collision_cost(q, belief, cfg.lambda);
    cfg.track_weight * track + cfg.effort_weight * effort + cfg.collision_weight * collision
}

/// A solved plan: the action sequence, the model's predicted states, the
/// per-stage predicted rewards and the objective value.
#[derive(Debug, Clone)]
pub struct MpcPlan {
    pub actions: Vec<Action>,
    pub predicted_states: Vec<StateVector>,
    pub predicted_norm: Vec<NormState>,
    pub stage_rewards: Vec<f64>,
    pub objective: f64,
    /// Action executed before the plan started; stage-0 effort is relative
    /// to it.
    pub prev_action: ActionArray,
}

impl MpcPlan {
    /// First action of the plan, the receding-horizon policy output.
    pub fn act(&self) -> Action {
        self.actions[0]
    }
}

/// Everything a single solve needs about the current situation.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub state: StateVector,
    pub norm_state: NormState,
    /// Padded L-1 history pairs for the model burn-in.
    pub history: Vec<(NormState, ActionArray)>,
    pub prev_action: ActionArray,
    pub belief: WorldBelief,
    pub target: Vec2,
}

/// Per-iteration optimizer diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveIterationStat {
    pub iteration: usize,
    pub best_cost: f64,
    pub elite_mean_cost: f64,
}

/// The planner configuration bundle; stateless across solves.
#[derive(Debug, Clone)]
pub struct MpcPolicy {
    pub cfg: MpcConfig,
    pub reward_weights: RewardWeights,
    pub sim: SimConfig,
    pub norm: NormSpec,
}

impl MpcPolicy {
    pub fn new(cfg: MpcConfig, reward_weights: RewardWeights, sim: SimConfig, norm: NormSpec) -> Self {
        MpcPolicy {
            cfg,
            reward_weights,
            sim,
            norm,
        }
    }

    /// Objective of one candidate flat action sequence (2H values in [-1,1]).
    fn evaluate(&self, model: &dyn TransitionModel, req: &SolveRequest, burn: &crate::dynamics::RolloutCursor, seq: &[f64]) -> f64 {
        let mut hs = burn.clone();
        let mut cur = req.norm_state;
        let mut prev_a = req.prev_action;
        let mut d_prev = req.state.rel_target.norm();
        let mut objective = 0.0;
        for j in 0..self.cfg.horizon {
            let a = [seq[2 * j], seq[2 * j + 1]];
            cur = model.advance(&mut hs, &cur, &a);
            let pred = self.norm.denormalize(&cur);
            let (reward, _) = self.predicted_reward(&pred, d_prev, req);
            objective += stage_cost(&pred, &prev_a, &a, &req.belief, req.target, &self.cfg)
                - self.cfg.reward_weight * reward;
            d_prev = pred.rel_target.norm();
            prev_a = a;
        }
        objective
    }

    /// Shaped reward of a predicted state, using the lidar belief in place of
    /// the unknown true map.
    fn predicted_reward(&self, pred: &StateVector, d_prev: f64, req: &SolveRequest) -> (f64, StepOutcome) {
        let d_curr = pred.rel_target.norm();
        let q = req.target - pred.rel_target;
        let d_min = req.belief.distance(q);
        let status = if d_curr <= self.sim.target_radius {
            StepOutcome::ReachedTarget
        } else if d_min < self.sim.uav_radius {
            StepOutcome::Collision
        } else {
            StepOutcome::Running
        };
        let yaw_err = {
            let bearing = pred.rel_target.y.atan2(pred.rel_target.x);
            if d_curr < 1e-12 {
                0.0
            } else {
                crate::geom::wrap_angle(bearing - pred.yaw).abs()
            }
        };
        let breakdown = total_reward(
            &RewardInputs {
                d_prev,
                d_curr,
                yaw_err,
                d_min: d_min.min(f64::MAX),
                status,
            },
            &self.reward_weights,
            &self.sim,
        );
        (breakdown.total, status)
    }

    /// Reconstruct the full plan for a chosen sequence.
    fn realize(&self, model: &dyn TransitionModel, req: &SolveRequest, burn: &crate::dynamics::RolloutCursor, seq: &[f64], objective: f64) -> MpcPlan {
        let mut hs = burn.clone();
        let mut cur = req.norm_state;
        let mut d_prev = req.state.rel_target.norm();
        let mut actions = Vec::with_capacity(self.cfg.horizon);
        let mut predicted_states = Vec::with_capacity(self.cfg.horizon);
        let mut predicted_norm = Vec::with_capacity(self.cfg.horizon);
        let mut stage_rewards = Vec::with_capacity(self.cfg.horizon);
        for j in 0..self.cfg.horizon {
            let a = [seq[2 * j], seq[2 * j + 1]];
            cur = model.advance(&mut hs, &cur, &a);
            let pred = self.norm.denormalize(&cur);
            let (reward, _) = self.predicted_reward(&pred, d_prev, req);
            d_prev = pred.rel_target.norm();
            actions.push(Action::new(a[0], a[1]));
            predicted_states.push(pred);
            predicted_norm.push(cur);
            stage_rewards.push(reward);
        }
        MpcPlan {
            actions,
            predicted_states,
            predicted_norm,
            stage_rewards,
            objective,
            prev_action: req.prev_action,
        }
    }

    /// Cross-entropy solve against a frozen model snapshot. Deterministic for
    /// a fixed (request, model, seed).
    pub fn solve(&self, model: &dyn TransitionModel, req: &SolveRequest, seed: u64) -> MpcPlan {
        self.solve_traced(model, req, seed, None)
    }

    pub fn solve_traced(
        &self,
        model: &dyn TransitionModel,
        req: &SolveRequest,
        seed: u64,
        mut trace: Option<&mut Vec<SolveIterationStat>>,
    ) -> MpcPlan {
        let dims = 2 * self.cfg.horizon;
        let n_elite = self.cfg.elites();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = model.begin(&req.history);
        let mut mean = vec![0.0; dims];
        let mut std = vec![self.cfg.init_std; dims];
        let mut best_seq: Option<Vec<f64>> = None;
        let mut best_cost = f64::INFINITY;
        let mut population: Vec<Vec<f64>> = Vec::with_capacity(self.cfg.population);
        // Deterministic reference sequences evaluated alongside the Gaussian
        // samples: the sampler mean, the best sequence so far, holding the
        // previous action, and a full-speed dash along the current heading.
        // They anchor the search so the returned plan is never worse than
        // these nominals under the frozen model.
        let hold: Vec<f64> = (0..self.cfg.horizon)
            .flat_map(|_| req.prev_action)
            .collect();
        let dash: Vec<f64> = (0..self.cfg.horizon).flat_map(|_| [1.0, 0.0]).collect();
        for iteration in 0..self.cfg.iterations {
            population.clear();
            population.push(mean.iter().map(|v: &f64| v.clamp(-1.0, 1.0)).collect());
            population.push(hold.clone());
            population.push(dash.clone());
            if let Some(best) = &best_seq {
                population.push(best.clone());
            }
            while population.len() < self.cfg.population {
                let cand: Vec<f64> = (0..dims)
                    .map(|k| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (mean[k] + std[k] * z).clamp(-1.0, 1.0)
                    })
                    .collect();
                population.push(cand);
            }
            let costs = self.population_costs(model, req, &burn, &population);
            let mut order: Vec<usize> = (0..population.len()).collect();
            order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
            let elites = &order[..n_elite];
            if costs[elites[0]] < best_cost {
                best_cost = costs[elites[0]];
                best_seq = Some(population[elites[0]].clone());
            }
            let elite_mean_cost =
                elites.iter().map(|&i| costs[i]).sum::<f64>() / n_elite as f64;
            if let Some(t) = trace.as_deref_mut() {
                t.push(SolveIterationStat {
                    iteration,
                    best_cost,
                    elite_mean_cost,
                });
            }
            for k in 0..dims {
                let m = elites.iter().map(|&i| population[i][k]).sum::<f64>() / n_elite as f64;
                let var = elites
                    .iter()
                    .map(|&i| {
                        let d = population[i][k] - m;
                        d * d
                    })
                    .sum::<f64>()
                    / n_elite as f64;
                mean[k] = m;
                let s = var.sqrt();
                std[k] = if s < 1e-12 { self.cfg.init_std } else { s };
            }
        }
        let seq = best_seq.expect("at least one optimizer iteration");
        self.realize(model, req, &burn, &seq, best_cost)
    }

    #[cfg(feature = "parallel")]
    fn population_costs(
        &self,
        model: &dyn TransitionModel,
        req: &SolveRequest,
        burn: &crate::dynamics::RolloutCursor,
        population: &[Vec<f64>],
    ) -> Vec<f64> {
        use rayon::prelude::*;
        population
            .par_iter()
            .map(|seq| self.evaluate(model, req, burn, seq))
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn population_costs(
        &self,
        model: &dyn TransitionModel,
        req: &SolveRequest,
        burn: &crate::dynamics::RolloutCursor,
        population: &[Vec<f64>],
    ) -> Vec<f64> {
        population
            .iter()
            .map(|seq| self.evaluate(model, req, burn, seq))
            .collect()
    }

    /// Objective of an arbitrary hand-built sequence, for baselines and
    /// diagnostics.
    pub fn objective_of(&self, model: &dyn TransitionModel, req: &SolveRequest, seq: &[f64]) -> f64 {
        assert_eq!(seq.len(), 2 * self.cfg.horizon);
        let burn = model.begin(&req.history);
        self.evaluate(model, req, &burn, seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynConfig, DynamicsModel};
    use crate::geom::Vec2;
    use crate::mdp::STATE_DIM;
    use crate::sim::ArenaConfig;

    fn policy() -> MpcPolicy {
        let sim = SimConfig::default();
        let arena = ArenaConfig {
            width: 100.0,
            depth: 100.0,
            height: 50.0,
        };
        MpcPolicy::new(
            MpcConfig::default(),
            RewardWeights::default(),
            sim,
            NormSpec::new(&arena, &sim),
        )
    }

    fn request_at(pos: Vec2, yaw: f64, target: Vec2, belief: WorldBelief, p: &MpcPolicy) -> SolveRequest {
        let state = StateVector {
            rel_target: target - pos,
            vel: Vec2::ZERO,
            speed: 0.0,
            yaw,
            lidar: [p.sim.sensor_range; 7],
        };
        SolveRequest {
            norm_state: p.norm.normalize(&state),
            state,
            history: vec![([0.0; STATE_DIM], [0.0; 2]); 4],
            prev_action: [0.0, 0.0],
            belief,
            target,
        }
    }

    #[test]
    fn collision_cost_endpoints() {
        let belief = WorldBelief {
            points: vec![Vec2::new(1.5, 0.0)],
        };
        let lambda = 1.5;
        assert!((collision_cost(Vec2::new(1.5, 0.0), &belief, lambda) - 1.0).abs() < 1e-12);
        let at_lambda = collision_cost(Vec2::ZERO, &belief, lambda);
        assert!((at_lambda - (-1.0_f64).exp()).abs() < 1e-12);
        let empty = WorldBelief::default();
        assert_eq!(collision_cost(Vec2::ZERO, &empty, lambda), 0.0);
    }

    #[test]
    fn collision_cost_monotone_in_distance() {
        let belief = WorldBelief {
            points: vec![Vec2::ZERO],
        };
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let d = 0.2 * k as f64;
            let c = collision_cost(Vec2::new(d, 0.0), &belief, 1.5);
            assert!(c < last);
            last = c;
        }
    }

    #[test]
    fn stage_cost_tracking_only() {
        let mut cfg = MpcConfig::default();
        cfg.track_weight = 1.0;
        cfg.effort_weight = 0.0;
        cfg.collision_weight = 0.0;
        let pred = StateVector {
            rel_target: Vec2::new(3.0, 4.0),
            vel: Vec2::ZERO,
            speed: 0.0,
            yaw: 0.0,
            lidar: [20.0; 7],
        };
        let c = stage_cost(
            &pred,
            &[0.0, 0.0],
            &[0.0, 0.0],
            &WorldBelief::default(),
            Vec2::new(50.0, 50.0),
            &cfg,
        );
        assert!((c - 25.0).abs() < 1e-12);
    }

    #[test]
    fn stage_cost_effort_only() {
        let mut cfg = MpcConfig::default();
        cfg.track_weight = 0.0;
        cfg.effort_weight = 1.0;
        cfg.collision_weight = 0.0;
        let pred = StateVector {
            rel_target: Vec2::ZERO,
            vel: Vec2::ZERO,
            speed: 0.0,
            yaw: 0.0,
            lidar: [20.0; 7],
        };
        let c = stage_cost(
            &pred,
            &[0.0, 0.0],
            &[0.2, 0.0],
            &WorldBelief::default(),
            Vec2::ZERO,
            &cfg,
        );
        assert!((c - 0.04).abs() < 1e-12);
    }

    #[test]
    fn solve_is_seed_deterministic() {
        let p = policy();
        let model = DynamicsModel::new(
            DynConfig {
                history_len: 5,
                lstm_layers: 1,
                lstm_units: 16,
                ..DynConfig::default()
            },
            11,
        );
        let req = request_at(
            Vec2::new(20.0, 20.0),
            0.0,
            Vec2::new(80.0, 80.0),
            WorldBelief::default(),
            &p,
        );
        let a = p.solve(&model, &req, 99);
        let b = p.solve(&model, &req, 99);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.actions, b.actions);
        assert_eq!(a.predicted_norm, b.predicted_norm);
    }

    #[test]
    fn actions_stay_clipped() {
        let p = policy();
        let model = DynamicsModel::new(
            DynConfig {
                history_len: 5,
                lstm_layers: 1,
                lstm_units: 16,
                ..DynConfig::default()
            },
            1,
        );
        let req = request_at(
            Vec2::new(10.0, 50.0),
            1.0,
            Vec2::new(90.0, 50.0),
            WorldBelief::default(),
            &p,
        );
        let plan = p.solve(&model, &req, 5);
        for a in &plan.actions {
            assert!(a.speed_ratio.abs() <= 1.0 && a.steering.abs() <= 1.0);
        }
        assert_eq!(plan.act(), plan.actions[0]);
    }
}
