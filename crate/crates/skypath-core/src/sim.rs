//! Seeded planar UAV world: cylindrical obstacles, lidar, episode termination.
//!
//! The UAV flies at constant altitude, so cylinders reduce to discs and the
//! arena to a rectangle with opaque, lethal walls. Everything is deterministic
//! given the scenario seed.

use crate::geom::{ray_axis_segment, ray_circle, wrap_angle, Vec2};
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Heading offsets of the 7 lidar rays relative to the UAV yaw, left to right
/// over a pi scan arc in pi/6 increments.
pub const LIDAR_OFFSETS: [f64; 7] = [
    -PI / 2.0,
    -PI / 3.0,
    -PI / 6.0,
    0.0,
    PI / 6.0,
    PI / 3.0,
    PI / 2.0,
];

/// Start/target discs are inset from the arena corners by this margin.
pub const CORNER_INSET: f64 = 10.0;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scenario infeasible: {0}")]
    Infeasible(String),
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse scenario file: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig {
    pub width: f64,
    pub depth: f64,
    /// Informational only; motion is planar.
    #[serde(default = "default_height")]
    pub height: f64,
}

fn default_height() -> f64 {
    50.0
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            width: 200.0,
            depth: 200.0,
            height: 50.0,
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.width <= 0.0 || self.depth <= 0.0 {
            return Err(SimError::InvalidConfig(
                "arena width and depth must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCylinder {
    pub center: Vec2,
    pub radius: f64,
    /// Informational only.
    pub height: f64,
    /// Meters/second along +x; the dynamic scenarios use negative values.
    pub velocity_x: f64,
}

/// Simulation constants shared by the simulator, the reward layer and the
/// planner. Defaults follow the experiment setup; none are hard-coded
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub v_max: f64,
    pub yaw_rate_max: f64,
    pub safe_distance: f64,
    pub sensor_range: f64,
    pub uav_radius: f64,
    pub target_radius: f64,
    pub max_steps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.5,
            v_max: 15.0,
            yaw_rate_max: PI / 2.0,
            safe_distance: 1.5,
            sensor_range: 20.0,
            uav_radius: 0.5,
            target_radius: 3.0,
            max_steps: 500,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("yaw_rate_max", self.yaw_rate_max),
            ("safe_distance", self.safe_distance),
            ("sensor_range", self.sensor_range),
            ("uav_radius", self.uav_radius),
            ("target_radius", self.target_radius),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(SimError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be positive".into()));
        }
        if self.safe_distance <= self.uav_radius {
            return Err(SimError::InvalidConfig(
                "safe_distance must exceed uav_radius".into(),
            ));
        }
        Ok(())
    }
}

/// UAV pose and velocity. `vel` is always consistent with `(speed, yaw)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavKinematicState {
    pub position: Vec2,
    pub yaw: f64,
    pub speed: f64,
    pub vel: Vec2,
}

impl UavKinematicState {
    pub fn from_pose(position: Vec2, yaw: f64, speed: f64) -> Self {
        let yaw = wrap_angle(yaw);
        UavKinematicState {
            position,
            yaw,
            speed,
            vel: Vec2::new(speed * yaw.cos(), speed * yaw.sin()),
        }
    }
}

/// One entry of an obstacle recipe: `count` cylinders of the given size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleRecipe {
    pub count: usize,
    pub radius: f64,
    #[serde(default = "default_height")]
    pub height: f64,
}

impl ObstacleRecipe {
    pub fn new(count: usize, radius: f64) -> Self {
        ObstacleRecipe {
            count,
            radius,
            height: 50.0,
        }
    }
}

/// Named arena corner for fixed start/target placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    Southwest,
    Southeast,
    Northwest,
    Northeast,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::Southwest,
        Corner::Southeast,
        Corner::Northwest,
        Corner::Northeast,
    ];

    pub fn point(self, arena: &ArenaConfig) -> Vec2 {
        let (w, d) = (arena.width, arena.depth);
        match self {
            Corner::Southwest => Vec2::new(CORNER_INSET, CORNER_INSET),
            Corner::Southeast => Vec2::new(w - CORNER_INSET, CORNER_INSET),
            Corner::Northwest => Vec2::new(CORNER_INSET, d - CORNER_INSET),
            Corner::Northeast => Vec2::new(w - CORNER_INSET, d - CORNER_INSET),
        }
    }
}

/// Benchmark scenario families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScenarioKind {
    Training,
    E1,
    E2,
    /// Training layout with obstacles moving at the given speed along -x.
    Dynamic(f64),
}

/// Full description of a world to spawn. The radius figures read the paper's
/// "5 x 50" cylinder sizes as radius x height; see the crate docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub arena: ArenaConfig,
    pub obstacles: Vec<ObstacleRecipe>,
    pub start_corner: Option<Corner>,
    pub target_corner: Option<Corner>,
    pub seed: u64,
    pub dynamic_velocity: f64,
}

impl ScenarioSpec {
    pub fn from_kind(kind: ScenarioKind, seed: u64) -> Self {
        let (recipes, vel) = match kind {
            ScenarioKind::Training => (
                vec![ObstacleRecipe::new(5, 5.0), ObstacleRecipe::new(5, 10.0)],
                0.0,
            ),
            ScenarioKind::E1 => (
                vec![ObstacleRecipe::new(5, 20.0), ObstacleRecipe::new(5, 15.0)],
                0.0,
            ),
            ScenarioKind::E2 => (
                vec![ObstacleRecipe::new(10, 20.0), ObstacleRecipe::new(10, 5.0)],
                0.0,
            ),
            ScenarioKind::Dynamic(v) => (
                vec![ObstacleRecipe::new(5, 5.0), ObstacleRecipe::new(5, 10.0)],
                v,
            ),
        };
        ScenarioSpec {
            arena: ArenaConfig::default(),
            obstacles: recipes,
            start_corner: None,
            target_corner: None,
            seed,
            dynamic_velocity: vel,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parse a scenario spec from its TOML form. Keys: `arena`, `obstacles`,
    /// `start_corner`, `target_corner`, `seed`, `dynamic_velocity`.
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct ScenarioFile {
            arena: ArenaConfig,
            #[serde(default)]
            obstacles: Vec<ObstacleRecipe>,
            #[serde(default)]
            start_corner: Option<Corner>,
            #[serde(default)]
            target_corner: Option<Corner>,
            seed: u64,
            #[serde(default)]
            dynamic_velocity: f64,
        }
        let f: ScenarioFile = toml::from_str(text)?;
        let spec = ScenarioSpec {
            arena: f.arena,
            obstacles: f.obstacles,
            start_corner: f.start_corner,
            target_corner: f.target_corner,
            seed: f.seed,
            dynamic_velocity: f.dynamic_velocity,
        };
        spec.arena.validate()?;
        for r in &spec.obstacles {
            if r.radius <= 0.0 {
                return Err(SimError::InvalidConfig("obstacle radius must be positive".into()));
            }
        }
        if let (Some(s), Some(t)) = (spec.start_corner, spec.target_corner) {
            if s == t {
                return Err(SimError::InvalidConfig(
                    "start and target corners must differ".into(),
                ));
            }
        }
        Ok(spec)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self, SimError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// A spawned world: geometry plus start/target. Mutated only by its owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub arena: ArenaConfig,
    pub obstacles: Vec<ObstacleCylinder>,
    pub start: Vec2,
    pub target: Vec2,
    pub seed: u64,
}

/// Episode status after a step. Terminal statuses end the episode; the checks
/// apply in the order target, collision, timeout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepOutcome {
    Running,
    ReachedTarget,
    Collision,
    TimedOut,
}

impl StepOutcome {
    pub fn is_terminal(self) -> bool {
        self != StepOutcome::Running
    }
}

/// Spawn a world from a scenario spec. Start and target go to distinct
/// corners; obstacles are rejection-sampled so none overlaps another obstacle
/// or the start/target clearance discs. Deterministic for a fixed seed.
pub fn spawn_scenario(spec: &ScenarioSpec, cfg: &SimConfig) -> Result<World, SimError> {
    spec.arena.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let start_corner = match spec.start_corner {
        Some(c) => c,
        None => Corner::ALL[rng.random_range(0..4)],
    };
    let target_corner = match spec.target_corner {
        Some(c) => {
            if c == start_corner {
                return Err(SimError::InvalidConfig(
                    "start and target corners must differ".into(),
                ));
            }
            c
        }
        None => {
            let remaining: Vec<Corner> = Corner::ALL
                .into_iter()
                .filter(|c| *c != start_corner)
                .collect();
            remaining[rng.random_range(0..remaining.len())]
        }
    };
    let start = start_corner.point(&spec.arena);
    let target = target_corner.point(&spec.arena);

    // Largest discs first; the clearance disc keeps endpoints reachable.
    let clearance = cfg.target_radius + cfg.safe_distance;
    let mut pending: Vec<(f64, f64)> = Vec::new();
    for recipe in &spec.obstacles {
        if recipe.radius <= 0.0 {
            return Err(SimError::InvalidConfig("obstacle radius must be positive".into()));
        }
        for _ in 0..recipe.count {
            pending.push((recipe.radius, recipe.height));
        }
    }
    pending.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut obstacles: Vec<ObstacleCylinder> = Vec::with_capacity(pending.len());
    for (radius, height) in pending {
        if 2.0 * radius >= spec.arena.width || 2.0 * radius >= spec.arena.depth {
            return Err(SimError::Infeasible(format!(
                "obstacle radius {radius} does not fit the arena"
            )));
        }
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let c = Vec2::new(
                rng.random_range(radius..spec.arena.width - radius),
                rng.random_range(radius..spec.arena.depth - radius),
            );
            let blocks_endpoint = c.distance(start) <= radius + clearance
                || c.distance(target) <= radius + clearance;
            let overlaps = obstacles
                .iter()
                .any(|o| c.distance(o.center) <= radius + o.radius);
            if !blocks_endpoint && !overlaps {
                obstacles.push(ObstacleCylinder {
                    center: c,
                    radius,
                    height,
                    velocity_x: if spec.dynamic_velocity == 0.0 { 0.0 } else { -spec.dynamic_velocity },
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::Infeasible(format!(
                "no room for obstacle of radius {radius} after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )));
        }
    }

    Ok(World {
        arena: spec.arena,
        obstacles,
        start,
        target,
        seed: spec.seed,
    })
}

/// Advance the UAV one time step.
///
/// Speed is commanded directly as a fraction of `v_max`; the yaw increment is
/// rate-limited. Explicit Euler at `cfg.dt`.
pub fn step_kinematics(
    s: &UavKinematicState,
    action: crate::mdp::Action,
    cfg: &SimConfig,
) -> UavKinematicState {
    let speed = action.speed_ratio * cfg.v_max;
    let max_turn = cfg.yaw_rate_max * cfg.dt;
    let turn = (action.steering * max_turn).clamp(-max_turn, max_turn);
    let yaw = wrap_angle(s.yaw + turn);
    let vel = Vec2::new(speed * yaw.cos(), speed * yaw.sin());
    UavKinematicState {
        position: s.position + vel * cfg.dt,
        yaw,
        speed,
        vel,
    }
}

/// Move every obstacle by its velocity, wrapping around the x extent so the
/// obstacle density stays constant in dynamic scenarios.
pub fn step_obstacles(world: &mut World, dt: f64) {
    let width = world.arena.width;
    for o in &mut world.obstacles {
        if o.velocity_x != 0.0 {
            o.center.x = (o.center.x + o.velocity_x * dt).rem_euclid(width);
        }
    }
}

/// Cast the 7 lidar rays. Readings are clipped to `sensor_range`; walls are
/// opaque.
pub fn lidar_scan(s: &UavKinematicState, world: &World, cfg: &SimConfig) -> [f64; 7] {
    let mut out = [cfg.sensor_range; 7];
    for (i, offset) in LIDAR_OFFSETS.iter().enumerate() {
        let dir = Vec2::from_angle(s.yaw + offset);
        let mut best = cfg.sensor_range;
        for o in &world.obstacles {
            if let Some(t) = ray_circle(s.position, dir, o.center, o.radius) {
                if t < best {
                    best = t;
                }
            }
        }
        for t in wall_hits(s.position, dir, &world.arena) {
            if t < best {
                best = t;
            }
        }
        out[i] = best;
    }
    out
}

fn wall_hits(origin: Vec2, dir: Vec2, arena: &ArenaConfig) -> impl Iterator<Item = f64> {
    let (w, d) = (arena.width, arena.depth);
    [
        ray_axis_segment(origin, dir, 0, 0.0, 0.0, d),
        ray_axis_segment(origin, dir, 0, w, 0.0, d),
        ray_axis_segment(origin, dir, 1, 0.0, 0.0, w),
        ray_axis_segment(origin, dir, 1, d, 0.0, w),
    ]
    .into_iter()
    .flatten()
}

/// Distance from a point to the closest obstacle surface or arena wall,
/// floored at zero.
pub fn nearest_obstacle_distance(p: Vec2, world: &World) -> f64 {
    let wall = (p.x)
        .min(world.arena.width - p.x)
        .min(p.y)
        .min(world.arena.depth - p.y);
    let mut best = wall;
    for o in &world.obstacles {
        let d = p.distance(o.center) - o.radius;
        if d < best {
            best = d;
        }
    }
    best.max(0.0)
}

/// Terminal classification with target-first precedence.
pub fn classify_step(
    world: &World,
    s: &UavKinematicState,
    step_index: usize,
    cfg: &SimConfig,
) -> StepOutcome {
    if s.position.distance(world.target) <= cfg.target_radius {
        return StepOutcome::ReachedTarget;
    }
    if nearest_obstacle_distance(s.position, world) < cfg.uav_radius {
        return StepOutcome::Collision;
    }
    if step_index >= cfg.max_steps {
        return StepOutcome::TimedOut;
    }
    StepOutcome::Running
}
