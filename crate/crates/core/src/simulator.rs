//! Discrete-time world: spawning, sensing, leader-first control evaluation,
//! forward-Euler integration and run orchestration.
//!
//! Within a tick the leader's control is computed first; every follower's
//! formation term then uses that control and the leader pose from the start
//! of the tick. All UAVs integrate `p ← p + u·dt` simultaneously.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviors::{
    collision_behavior, combine_control, formation_behavior, goal_behavior, obstacle_behavior,
    reconfiguration_behavior, BehaviorBreakdown, BehaviorError, BehaviorTerms, Gains, ReconfigMode,
    Role, SensingRanges,
};
use crate::formation::{desired_offset, desired_position, FormationError, FormationSpec, UavState};
use crate::geometry::{Obstacle, Vec2};
use crate::io::{TrajectoryLog, TrajectoryRow};
use crate::metrics::{
    metrics_row, summarize, MetricsSeries, RunSummary, Termination, DEFAULT_EPS_ACT,
};
use crate::scalar::Scalar;
use crate::scenario::Scenario;

/// Rejection-sampling budget per UAV in [`spawn`].
pub const SPAWN_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("could not place UAV {uav} after {attempts} attempts; spawn disk too crowded")]
    SpawnCrowded { uav: usize, attempts: usize },
    #[error("spawned UAV {uav} lies inside obstacle {obstacle}")]
    SpawnInsideObstacle { uav: usize, obstacle: usize },
    #[error("invalid simulation parameter `{0}`")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Formation(#[from] FormationError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

/// Integration, limits and termination parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SimConfig<T> {
    /// Control period (s).
    pub dt: T,
    pub max_steps: usize,
    /// Per-UAV speed limit (m/s).
    pub v_max: T,
    /// Speed limit applied to the leader's combined control (m/s), `≤ v_max`.
    pub leader_speed: T,
    /// Leader slow-down per metre of worst follower straggle (1/m); 0 disables.
    pub leader_wait: T,
    pub ranges: SensingRanges<T>,
    /// Leader-to-goal distance that ends a run (m).
    pub goal_tolerance: T,
    pub seed: u64,
    pub spawn_radius: T,
    /// Per-pair magnitude cap for collision and reconfiguration terms (m/s).
    pub force_cap: T,
    pub reconfig_mode: ReconfigMode,
    /// 0: followers use this tick's leader control; 1: the previous tick's.
    pub leader_delay: u8,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        let v_max = T::lit(2.0);
        Self {
            dt: T::lit(0.02),
            max_steps: 5000,
            v_max,
            leader_speed: default_leader_speed(v_max),
            leader_wait: T::lit(3.0),
            ranges: SensingRanges::default(),
            goal_tolerance: T::lit(0.1),
            seed: 0,
            spawn_radius: T::lit(1.0),
            force_cap: default_force_cap(v_max),
            reconfig_mode: ReconfigMode::Signed,
            leader_delay: 0,
        }
    }
}

/// `10·v_max`.
pub fn default_force_cap<T: Scalar>(v_max: T) -> T {
    T::lit(10.0) * v_max
}

/// `0.75·v_max`, leaving followers headroom to close formation gaps.
pub fn default_leader_speed<T: Scalar>(v_max: T) -> T {
    T::lit(0.75) * v_max
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |x: T| x.is_finite() && x > T::zero();
        if !positive(self.dt) {
            return Err(SimError::InvalidConfig("dt"));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps"));
        }
        if !positive(self.v_max) {
            return Err(SimError::InvalidConfig("v_max"));
        }
        if !positive(self.leader_speed) || self.leader_speed > self.v_max {
            return Err(SimError::InvalidConfig("leader_speed"));
        }
        if !self.leader_wait.is_finite() || self.leader_wait < T::zero() {
            return Err(SimError::InvalidConfig("leader_wait"));
        }
        if !positive(self.goal_tolerance) {
            return Err(SimError::InvalidConfig("goal_tolerance"));
        }
        if !positive(self.spawn_radius) {
            return Err(SimError::InvalidConfig("spawn_radius"));
        }
        if !positive(self.force_cap) {
            return Err(SimError::InvalidConfig("force_cap"));
        }
        if self.leader_delay > 1 {
            return Err(SimError::InvalidConfig("leader_delay"));
        }
        self.ranges.validate()?;
        Ok(())
    }
}

/// Obstacle as seen from one UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensedObstacle<T> {
    pub closest_point: Vec2<T>,
    pub distance: T,
}

/// One entry per obstacle closer than `r_s`, in obstacle order.
pub fn sense_obstacles<T: Scalar>(
    p_i: Vec2<T>,
    obstacles: &[Obstacle<T>],
    r_s: T,
) -> Vec<SensedObstacle<T>> {
    obstacles
        .iter()
        .filter_map(|o| {
            let closest_point = o.closest_boundary_point(p_i);
            let distance = o.distance(p_i);
            (distance < r_s).then_some(SensedObstacle {
                closest_point,
                distance,
            })
        })
        .collect()
}

/// Places `n` UAVs uniformly in a disk around `start`, at rest with heading 0,
/// at least `min_separation` apart.
///
/// Uses ChaCha8 seeded from `seed`; each position consumes two `f64` draws
/// `(u, v)` mapped to radius `R·√u` and angle `2πv`.
pub fn spawn<T: Scalar>(
    n: usize,
    start: Vec2<T>,
    spawn_radius: T,
    min_separation: T,
    seed: u64,
) -> Result<Vec<UavState<T>>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<UavState<T>> = Vec::with_capacity(n);
    for id in 1..=n {
        let mut attempts = 0;
        let position = loop {
            if attempts == SPAWN_ATTEMPTS {
                return Err(SimError::SpawnCrowded { uav: id, attempts });
            }
            attempts += 1;
            let radius = spawn_radius * T::lit(rng.gen::<f64>().sqrt());
            let angle = T::TAU() * T::lit(rng.gen::<f64>());
            let candidate = start + Vec2::from_angle(angle) * radius;
            if placed
                .iter()
                .all(|u| u.position.distance(candidate) >= min_separation)
            {
                break candidate;
            }
        };
        placed.push(UavState::at_rest(id, position));
    }
    Ok(placed)
}

/// A UAV found strictly inside an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Penetration {
    pub uav: usize,
    pub obstacle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T> {
    pub step: usize,
    pub time: T,
    /// Ordered by id.
    pub uavs: Vec<UavState<T>>,
    pub obstacles: Vec<Obstacle<T>>,
    pub goal: Vec2<T>,
    /// Outputs of the last tick, one per UAV.
    pub breakdowns: Vec<BehaviorBreakdown<T>>,
    /// Leader control from the last tick, used when `leader_delay = 1`.
    pub last_leader_control: Vec2<T>,
    pub penetration: Option<Penetration>,
}

impl<T: Scalar> WorldState<T> {
    pub fn new(uavs: Vec<UavState<T>>, obstacles: Vec<Obstacle<T>>, goal: Vec2<T>) -> Self {
        let n = uavs.len();
        Self {
            step: 0,
            time: T::zero(),
            uavs,
            obstacles,
            goal,
            breakdowns: vec![BehaviorBreakdown::default(); n],
            last_leader_control: Vec2::zero(),
            penetration: None,
        }
    }

    pub fn positions(&self) -> Vec<Vec2<T>> {
        self.uavs.iter().map(|u| u.position).collect()
    }

    pub fn headings(&self) -> Vec<T> {
        self.uavs.iter().map(|u| u.heading).collect()
    }

    fn find_penetration(&self) -> Option<Penetration> {
        self.uavs.iter().find_map(|u| {
            self.obstacles
                .iter()
                .position(|o| o.contains(u.position))
                .map(|k| Penetration {
                    uav: u.id,
                    obstacle: k + 1,
                })
        })
    }
}

/// Everything a tick needs besides the world itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controller<T> {
    pub spec: FormationSpec<T>,
    pub gains: Gains<T>,
    pub cfg: SimConfig<T>,
}

impl<T: Scalar> Controller<T> {
    fn terms_for(
        &self,
        world: &WorldState<T>,
        neighbors: &[(usize, Vec2<T>)],
        uav: &UavState<T>,
    ) -> BehaviorTerms<T> {
        let ranges = &self.cfg.ranges;
        let me = (uav.id, uav.position);
        BehaviorTerms {
            u_o: obstacle_behavior(uav.position, &world.obstacles, ranges, self.gains.k_o).value,
            u_c: collision_behavior(
                me,
                neighbors,
                self.spec.leader,
                ranges,
                &self.gains,
                self.cfg.force_cap,
            )
            .value,
            u_r: reconfiguration_behavior(
                me,
                neighbors,
                &self.spec,
                ranges,
                &self.gains,
                self.cfg.reconfig_mode,
                self.cfg.force_cap,
            )
            .value,
            ..Default::default()
        }
    }

    /// Behavior outputs for every UAV from an immutable snapshot, leader first.
    pub fn evaluate(&self, world: &WorldState<T>) -> Vec<BehaviorBreakdown<T>> {
        let eps_act = T::lit(DEFAULT_EPS_ACT);
        let li = self.spec.leader - 1;
        let leader = world.uavs[li];
        let neighbors: Vec<(usize, Vec2<T>)> =
            world.uavs.iter().map(|u| (u.id, u.position)).collect();

        let targets: Vec<Option<Vec2<T>>> = world
            .uavs
            .iter()
            .map(|u| {
                (u.id != self.spec.leader).then(|| {
                    desired_position(leader.position, leader.heading, u.id, &self.spec)
                        .expect("follower index in range")
                })
            })
            .collect();
        // Straggle: how far a follower sits beyond its nominal leader distance.
        // Same-wing spacing keeps this near zero whether the wing is open or folded.
        let worst = world
            .uavs
            .iter()
            .filter(|u| u.id != self.spec.leader)
            .map(|u| {
                let nominal = desired_offset(u.id, &self.spec, T::zero())
                    .map(|(dist, _)| dist)
                    .unwrap_or_default();
                u.position.distance(leader.position) - nominal
            })
            .fold(T::zero(), T::max);

        let mut leader_terms = self.terms_for(world, &neighbors, &leader);
        leader_terms.u_g = goal_behavior(leader.position, world.goal, self.gains.k_g);
        let leader_limit = self.cfg.leader_speed / (T::one() + self.cfg.leader_wait * worst);
        let leader_out = combine_control(Role::Leader, leader_terms, leader_limit, eps_act);

        let u_l = if self.cfg.leader_delay == 0 {
            leader_out.u_total
        } else {
            world.last_leader_control
        };

        world
            .uavs
            .iter()
            .zip(targets)
            .map(|(uav, target)| {
                let Some(target) = target else {
                    return leader_out;
                };
                let mut terms = self.terms_for(world, &neighbors, uav);
                terms.u_f = formation_behavior(uav.position, target, u_l, self.gains.k_f);
                combine_control(Role::Follower, terms, self.cfg.v_max, eps_act)
            })
            .collect()
    }

    /// Advances the world by one control period.
    pub fn tick(&self, world: &WorldState<T>) -> WorldState<T> {
        let breakdowns = self.evaluate(world);
        let dt = self.cfg.dt;
        let uavs = world
            .uavs
            .iter()
            .zip(&breakdowns)
            .map(|(uav, b)| {
                let mut next = *uav;
                next.position = uav.position + b.u_total * dt;
                next.set_velocity(b.u_total);
                next
            })
            .collect();
        let step = world.step + 1;
        let mut next = WorldState {
            step,
            time: dt * T::from_usize(step).expect("step fits scalar"),
            uavs,
            obstacles: world.obstacles.clone(),
            goal: world.goal,
            last_leader_control: breakdowns[self.spec.leader - 1].u_total,
            breakdowns,
            penetration: None,
        };
        next.penetration = next.find_penetration();
        next
    }

    pub fn leader_at_goal(&self, world: &WorldState<T>) -> bool {
        world.uavs[self.spec.leader - 1]
            .position
            .distance(world.goal)
            < self.cfg.goal_tolerance
    }
}

/// Free-function form of [`Controller::tick`].
pub fn tick<T: Scalar>(
    world: &WorldState<T>,
    spec: &FormationSpec<T>,
    gains: &Gains<T>,
    cfg: &SimConfig<T>,
) -> WorldState<T> {
    Controller {
        spec: *spec,
        gains: *gains,
        cfg: *cfg,
    }
    .tick(world)
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput<T> {
    pub log: TrajectoryLog<T>,
    pub series: MetricsSeries<T>,
    pub summary: RunSummary<T>,
    pub penetration: Option<Penetration>,
    pub final_world: WorldState<T>,
}

/// Spawns the scenario's UAVs and runs until the goal, a penetration or
/// `max_steps`.
pub fn run<T: Scalar>(scenario: &Scenario<T>) -> Result<RunOutput<T>, SimError> {
    scenario.sim.validate()?;
    let uavs = spawn(
        scenario.formation.n,
        scenario.start,
        scenario.sim.spawn_radius,
        scenario.sim.ranges.r_a,
        scenario.sim.seed,
    )?;
    for u in &uavs {
        if let Some(k) = scenario
            .obstacles
            .iter()
            .position(|o| o.contains(u.position))
        {
            return Err(SimError::SpawnInsideObstacle {
                uav: u.id,
                obstacle: k + 1,
            });
        }
    }
    let world = WorldState::new(uavs, scenario.obstacles.clone(), scenario.goal);
    run_from(world, &scenario.controller())
}

/// Runs from an explicit initial world.
pub fn run_from<T: Scalar>(
    mut world: WorldState<T>,
    controller: &Controller<T>,
) -> Result<RunOutput<T>, SimError> {
    controller.spec.validate()?;
    controller.gains.validate()?;
    controller.cfg.validate()?;
    let eps_act = T::lit(DEFAULT_EPS_ACT);
    let n = world.uavs.len();
    let mut log = TrajectoryLog {
        rows: Vec::with_capacity(n * controller.cfg.max_steps.min(100_000)),
    };
    let mut series = MetricsSeries::default();
    let mut termination = Termination::MaxSteps;
    for _ in 0..controller.cfg.max_steps {
        world = controller.tick(&world);
        log.rows.extend(
            world
                .uavs
                .iter()
                .zip(&world.breakdowns)
                .map(|(u, b)| TrajectoryRow::new(world.step, world.time, u, b)),
        );
        series.rows.push(metrics_row(
            world.step,
            world.time,
            &world.uavs,
            world.breakdowns.iter().map(|b| b.u_r.norm()),
            &controller.spec,
            eps_act,
        ));
        if world.penetration.is_some() {
            termination = Termination::ObstaclePenetration;
            break;
        }
        if controller.leader_at_goal(&world) {
            termination = Termination::GoalReached;
            break;
        }
    }
    let summary = summarize(&series, termination).expect("at least one step was simulated");
    Ok(RunOutput {
        log,
        series,
        summary,
        penetration: world.penetration,
        final_world: world,
    })
}
