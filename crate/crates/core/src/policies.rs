//! Benchmark control schemes sharing the interface of the information-seeking
//! planner: flocking toward the source estimate, and the two-stage scheme that
//! localizes the robots first and then treats their estimates as truth.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{EnvParams, ExperimentConfig, MotionParams};
use crate::control::ControlInput;
use crate::error::{BeliefLevel, Result, SlassError};
use crate::geometry::Position;
use crate::infocontrol::{ascend, project_controls, subsample_by_weight, toward, ControlSolution, MiObjective, PlanningHypothesis};
use crate::measurement::{robot_links_log_likelihood, source_links_log_likelihood, MeasurementSet};
use crate::rbpf::{gaussian_jitter, uniform_in_area, weighted_mean, BeliefState, SourceParticle};
use crate::resampling::{effective_sample_size, normalize_log_weights, systematic_indices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Proposed,
    Flocking,
    TwoStage,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Proposed, PolicyKind::Flocking, PolicyKind::TwoStage];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Proposed => "proposed",
            PolicyKind::Flocking => "flocking",
            PolicyKind::TwoStage => "two_stage",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = SlassError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proposed" => Ok(PolicyKind::Proposed),
            "flocking" => Ok(PolicyKind::Flocking),
            "two_stage" | "two-stage" => Ok(PolicyKind::TwoStage),
            other => Err(SlassError::InvalidArgument(format!(
                "unknown policy `{other}` (expected proposed, flocking or two_stage)"
            ))),
        }
    }
}

/// Every active robot heads straight for the current source estimate; the
/// commands are then projected for separation.
pub fn flocking_control(belief: &BeliefState, cfg: &ExperimentConfig, active: &[bool]) -> ControlInput {
    let robots = belief.robot_estimate();
    let raw = toward(belief.source_estimate(), &robots, active, cfg.motion.step_len);
    project_controls(&raw, &robots, cfg.d_min, cfg.motion.step_len).control
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotHypothesis {
    pub robots: Vec<Position>,
    pub weight: f64,
}

/// Beliefs of the two-stage benchmark: a particle filter over the joint robot
/// positions driven by robot-to-robot ranges only, and a separate particle
/// filter over the source conditioned on the robot point estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageBelief {
    pub robots: Vec<RobotHypothesis>,
    pub sources: Vec<SourceParticle>,
    pub cycle: usize,
}

/// Result of one two-stage cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageStep {
    pub robot_estimate: Vec<Position>,
    pub source_estimate: Position,
    pub solution: ControlSolution,
}

fn degenerate(cycle: usize, stage: u8) -> SlassError {
    SlassError::DegenerateBelief {
        cycle,
        level: if stage == 1 { BeliefLevel::Robot } else { BeliefLevel::Source },
        stage: Some(stage),
    }
}

impl TwoStageBelief {
    pub fn init<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Self {
        let wr = 1.0 / cfg.robot_particles as f64;
        let ws = 1.0 / cfg.source_particles as f64;
        Self {
            robots: (0..cfg.robot_particles)
                .map(|_| RobotHypothesis {
                    robots: cfg.robot_starts.clone(),
                    weight: wr,
                })
                .collect(),
            sources: (0..cfg.source_particles)
                .map(|_| SourceParticle {
                    pos: uniform_in_area(cfg, rng),
                    weight: ws,
                })
                .collect(),
            cycle: 1,
        }
    }

    /// Stage 1 reweighting with the robot-to-robot terms. With a single robot
    /// there are no such terms and the weights are unchanged.
    pub fn update_robots(&mut self, z: &MeasurementSet, env: &EnvParams) -> Result<()> {
        let mut log_w: Vec<f64> = self
            .robots
            .iter()
            .map(|h| h.weight.ln() + robot_links_log_likelihood(z, &h.robots, env))
            .collect();
        normalize_log_weights(&mut log_w).ok_or_else(|| degenerate(z.cycle, 1))?;
        for (h, w) in self.robots.iter_mut().zip(log_w) {
            h.weight = w;
        }
        Ok(())
    }

    /// Stage 2 reweighting with the source-to-robot terms at fixed robot
    /// positions.
    pub fn update_sources(&mut self, z: &MeasurementSet, robots: &[Position], env: &EnvParams) -> Result<()> {
        let mut log_w: Vec<f64> = self
            .sources
            .iter()
            .map(|s| s.weight.ln() + source_links_log_likelihood(z, s.pos, robots, env))
            .collect();
        normalize_log_weights(&mut log_w).ok_or_else(|| degenerate(z.cycle, 2))?;
        for (s, w) in self.sources.iter_mut().zip(log_w) {
            s.weight = w;
        }
        Ok(())
    }

    pub fn robot_estimate(&self) -> Vec<Position> {
        (0..self.robots[0].robots.len())
            .map(|k| {
                let positions: Vec<Position> = self.robots.iter().map(|h| h.robots[k]).collect();
                weighted_mean(&positions, self.robots.iter().map(|h| h.weight))
            })
            .collect()
    }

    pub fn source_estimate(&self) -> Position {
        let positions: Vec<Position> = self.sources.iter().map(|s| s.pos).collect();
        weighted_mean(&positions, self.sources.iter().map(|s| s.weight))
    }

    pub fn robot_ess(&self) -> f64 {
        effective_sample_size(&self.robots.iter().map(|h| h.weight).collect::<Vec<_>>())
    }

    pub fn resample<R: Rng + ?Sized>(&mut self, threshold: f64, rng: &mut R) {
        let m_r = self.robots.len();
        let w: Vec<f64> = self.robots.iter().map(|h| h.weight).collect();
        if effective_sample_size(&w) < threshold * m_r as f64 {
            let unit = 1.0 / m_r as f64;
            self.robots = systematic_indices(&w, m_r, rng)
                .into_iter()
                .map(|i| RobotHypothesis {
                    robots: self.robots[i].robots.clone(),
                    weight: unit,
                })
                .collect();
        }
        let m_s = self.sources.len();
        let w: Vec<f64> = self.sources.iter().map(|s| s.weight).collect();
        if effective_sample_size(&w) < threshold * m_s as f64 {
            let unit = 1.0 / m_s as f64;
            self.sources = systematic_indices(&w, m_s, rng)
                .into_iter()
                .map(|j| SourceParticle {
                    pos: self.sources[j].pos,
                    weight: unit,
                })
                .collect();
        }
    }

    pub fn predict<R: Rng + ?Sized>(&mut self, control: &ControlInput, motion: &MotionParams, rng: &mut R) {
        for h in &mut self.robots {
            for (k, pos) in h.robots.iter_mut().enumerate() {
                if control.active[k] {
                    *pos += control.steps[k] + gaussian_jitter(motion.sigma_c_sq, rng);
                }
            }
        }
        if motion.sigma_s_sq > 0.0 {
            let jitter = Normal::new(0.0, motion.sigma_s_sq.sqrt()).expect("finite variance");
            for s in &mut self.sources {
                s.pos.x += jitter.sample(rng);
                s.pos.y += jitter.sample(rng);
            }
        }
        self.cycle += 1;
    }

    /// The planner's view: a single robot hypothesis at the stage-1 estimate.
    pub fn objective<R: Rng + ?Sized>(&self, cfg: &ExperimentConfig, active: &[bool], rng: &mut R) -> MiObjective {
        let w: Vec<f64> = self.sources.iter().map(|s| s.weight).collect();
        let picks = subsample_by_weight(&w, cfg.planner.mixture_cap, rng);
        MiObjective {
            hypotheses: vec![PlanningHypothesis {
                weight: 1.0,
                robots: self.robot_estimate(),
                sources: picks.iter().map(|&(j, _)| self.sources[j].pos).collect(),
                source_weights: picks.iter().map(|&(_, w)| w).collect(),
            }],
            env: cfg.env,
            active: active.to_vec(),
        }
    }
}

/// One cycle of the two-stage benchmark: localize the robots, localize the
/// source at the robot estimate, resample, then plan with the information
/// objective over a single robot hypothesis.
pub fn two_stage_cycle<F: Rng + ?Sized, C: Rng + ?Sized>(
    belief: &mut TwoStageBelief,
    z: &MeasurementSet,
    cfg: &ExperimentConfig,
    active: &[bool],
    filter_rng: &mut F,
    control_rng: &mut C,
) -> Result<TwoStageStep> {
    belief.update_robots(z, &cfg.env)?;
    let robot_estimate = belief.robot_estimate();
    belief.update_sources(z, &robot_estimate, &cfg.env)?;
    belief.resample(cfg.ess_threshold, filter_rng);
    let robot_estimate = belief.robot_estimate();
    let source_estimate = belief.source_estimate();
    let objective = belief.objective(cfg, active, control_rng);
    let solution = ascend(&objective, &robot_estimate, source_estimate, cfg);
    Ok(TwoStageStep {
        robot_estimate,
        source_estimate,
        solution,
    })
}
