//! Ground-truth world and the per-cycle loop: measure, update, resample,
//! decide, move, predict.

use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::control::{min_constrained_distance, ControlInput};
use crate::error::{Result, SlassError};
use crate::geometry::{Position, Vec2};
use crate::infocontrol::solve_control;
use crate::measurement::{sample_measurements, MeasurementSet};
use crate::policies::{flocking_control, two_stage_cycle, PolicyKind, TwoStageBelief};
use crate::rbpf::BeliefState;
use crate::rng::TrialStreams;

/// Tolerance on the commanded step length of active robots.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance on the predicted separation of constrained pairs.
pub const SEPARATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub true_source: Position,
    pub true_robots: Vec<Position>,
    /// Once set, a robot stays arrived.
    pub arrived: Vec<bool>,
    pub cycle: usize,
}

impl WorldState {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            true_source: cfg.source_true,
            true_robots: cfg.robot_starts.clone(),
            arrived: vec![false; cfg.num_robots],
            cycle: 1,
        }
    }

    pub fn active(&self) -> Vec<bool> {
        self.arrived.iter().map(|a| !a).collect()
    }

    pub fn all_arrived(&self) -> bool {
        self.arrived.iter().all(|&a| a)
    }

    pub fn distances_to_source(&self) -> Vec<f64> {
        self.true_robots.iter().map(|r| r.distance(self.true_source)).collect()
    }
}

/// Filter state of whichever policy drives the trial.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyBelief {
    Joint(BeliefState),
    TwoStage(TwoStageBelief),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// True robot positions after this cycle's motion.
    pub true_robots: Vec<Position>,
    pub true_source: Position,
    pub source_estimate: Position,
    /// Robot estimates the decision was based on.
    pub robot_estimates: Vec<Position>,
    pub control: ControlInput,
    /// True robot-to-source distances after this cycle's motion.
    pub distances: Vec<f64>,
    /// Planner objective at the chosen commands; `None` for flocking.
    pub objective: Option<f64>,
    pub ess_outer: f64,
    /// Smallest separation of the commanded, predicted estimated positions
    /// over pairs with an active robot.
    pub min_predicted_distance: f64,
}

impl CycleRecord {
    pub fn source_error(&self) -> f64 {
        self.source_estimate.distance(self.true_source)
    }

    /// Whether the commands break the step-length or separation constraints.
    pub fn violates_constraints(&self, cfg: &ExperimentConfig) -> bool {
        self.control.norm_violation(cfg.motion.step_len) > NORM_TOL
            || self.min_predicted_distance < cfg.d_min - SEPARATION_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    AllArrived,
    MaxCycles,
    Aborted,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::AllArrived => "all_arrived",
            Termination::MaxCycles => "max_cycles",
            Termination::Aborted => "aborted",
        }
    }
}

/// One trial in progress.
#[derive(Debug, Clone)]
pub struct Trial {
    pub cfg: ExperimentConfig,
    pub policy: PolicyKind,
    pub world: WorldState,
    pub belief: PolicyBelief,
    streams: TrialStreams,
}

impl Trial {
    pub fn new(cfg: &ExperimentConfig, policy: PolicyKind, trial: u64) -> Self {
        let mut streams = TrialStreams::new(cfg.seed, trial);
        let belief = match policy {
            PolicyKind::Proposed | PolicyKind::Flocking => {
                PolicyBelief::Joint(BeliefState::init(cfg, &mut streams.filter))
            }
            PolicyKind::TwoStage => PolicyBelief::TwoStage(TwoStageBelief::init(cfg, &mut streams.filter)),
        };
        Self {
            cfg: cfg.clone(),
            policy,
            world: WorldState::new(cfg),
            belief,
            streams,
        }
    }

    /// Executes one control cycle.
    pub fn step(&mut self) -> Result<CycleRecord> {
        let cfg = &self.cfg;
        let cycle = self.world.cycle;
        let active = self.world.active();
        let z: MeasurementSet = sample_measurements(
            self.world.true_source,
            &self.world.true_robots,
            &cfg.env,
            cycle,
            &mut self.streams.world,
        );

        let (control, robot_estimates, source_estimate, objective, ess_outer) = match (&mut self.belief, self.policy) {
            (PolicyBelief::Joint(belief), policy) => {
                belief.update_weights(&z, &cfg.env)?;
                belief.resample(cfg.ess_threshold, &mut self.streams.filter);
                let ess = belief.outer_ess();
                let robots = belief.robot_estimate();
                let source = belief.source_estimate();
                let (control, objective) = if policy == PolicyKind::Flocking {
                    (flocking_control(belief, cfg, &active), None)
                } else {
                    let sol = solve_control(belief, cfg, &active, &mut self.streams.control)?;
                    (sol.control, Some(sol.objective))
                };
                (control, robots, source, objective, ess)
            }
            (PolicyBelief::TwoStage(belief), _) => {
                let step = two_stage_cycle(
                    belief,
                    &z,
                    cfg,
                    &active,
                    &mut self.streams.filter,
                    &mut self.streams.control,
                )?;
                let ess = belief.robot_ess();
                (
                    step.solution.control,
                    step.robot_estimate,
                    step.source_estimate,
                    Some(step.solution.objective),
                    ess,
                )
            }
        };
        let min_predicted_distance = min_constrained_distance(&control.apply(&robot_estimates), &active);
        let norm_error = control.norm_violation(cfg.motion.step_len);
        if norm_error > NORM_TOL || min_predicted_distance < cfg.d_min - SEPARATION_TOL {
            return Err(SlassError::ConstraintViolation {
                cycle,
                norm_error,
                min_distance: min_predicted_distance,
            });
        }

        move_robots(&mut self.world, cfg, &control, &mut self.streams.world);

        match &mut self.belief {
            PolicyBelief::Joint(b) => b.predict(&control, &cfg.motion, &mut self.streams.filter),
            PolicyBelief::TwoStage(b) => b.predict(&control, &cfg.motion, &mut self.streams.filter),
        }

        Ok(CycleRecord {
            cycle,
            true_robots: self.world.true_robots.clone(),
            true_source: self.world.true_source,
            source_estimate,
            robot_estimates,
            control,
            distances: self.world.distances_to_source(),
            objective,
            ess_outer,
            min_predicted_distance,
        })
    }
}

/// Moves the true robots and refreshes the arrival mask. Control error is
/// drawn for every robot, arrived or not, so the world stream advances
/// identically under every policy.
fn move_robots<R: rand::Rng + ?Sized>(world: &mut WorldState, cfg: &ExperimentConfig, control: &ControlInput, rng: &mut R) {
    for k in 0..world.true_robots.len() {
        let noise = control_error(cfg.motion.sigma_c_sq, rng);
        if !world.arrived[k] {
            world.true_robots[k] += control.steps[k] + noise;
        }
    }
    for (k, arrived) in world.arrived.iter_mut().enumerate() {
        *arrived |= world.true_robots[k].distance(world.true_source) <= cfg.arrive_radius;
    }
    world.cycle += 1;
}

/// Per-axis Gaussian draw that consumes two samples even when `var` is zero.
fn control_error<R: rand::Rng + ?Sized>(var: f64, rng: &mut R) -> Vec2 {
    let sd = var.max(0.0).sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Vec2::new(sd * x, sd * y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub records: Vec<CycleRecord>,
    pub termination: Termination,
    /// Diagnostic for aborted trials.
    pub abort_reason: Option<String>,
}

impl TrialOutcome {
    /// Source-estimate error per cycle, padded to `len` with the last value.
    pub fn clamped_errors(&self, len: usize) -> Vec<f64> {
        clamp_series(self.records.iter().map(CycleRecord::source_error), len)
    }

    /// True distance of robot `k` to the source per cycle, padded to `len`.
    pub fn clamped_distances(&self, k: usize, len: usize) -> Vec<f64> {
        clamp_series(self.records.iter().map(|r| r.distances[k]), len)
    }

    pub fn cycles(&self) -> usize {
        self.records.len()
    }
}

fn clamp_series(values: impl Iterator<Item = f64>, len: usize) -> Vec<f64> {
    let mut out: Vec<f64> = values.take(len).collect();
    let last = out.last().copied().unwrap_or(f64::NAN);
    out.resize(len, last);
    out
}

/// Runs a trial until every robot has arrived, the cycle cap is reached, or
/// the filter degenerates.
pub fn run_trial(cfg: &ExperimentConfig, policy: PolicyKind, trial: u64) -> TrialOutcome {
    let mut sim = Trial::new(cfg, policy, trial);
    let mut records = Vec::new();
    let mut termination = Termination::MaxCycles;
    let mut abort_reason = None;
    while records.len() < cfg.max_cycles {
        match sim.step() {
            Ok(rec) => records.push(rec),
            Err(e) => {
                termination = Termination::Aborted;
                abort_reason = Some(e.to_string());
                break;
            }
        }
        if sim.world.all_arrived() {
            termination = Termination::AllArrived;
            break;
        }
    }
    TrialOutcome {
        trial,
        records,
        termination,
        abort_reason,
    }
}
