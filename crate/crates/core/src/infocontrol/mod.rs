//! Information-seeking control: choose unit-step commands that maximize the
//! predicted mutual information between the source position and the next
//! cycle's source-to-robot measurements, subject to a minimum separation
//! between robots.

mod mixture;
mod objective;
mod projection;

pub use mixture::{
    build_mixture, gaussian_conditional_entropy, mixture_entropy_monte_carlo, mixture_entropy_pairwise,
    pairwise_single_component_offset, Mixture, MixtureComponent,
};
pub use objective::{
    mi_gradient, predicted_mutual_information, subsample_by_weight, MiObjective, PlanningHypothesis,
};
pub use projection::{normalize_steps, project_controls, Projection, MAX_SWEEPS};

use rand::Rng;

use crate::config::ExperimentConfig;
use crate::control::ControlInput;
use crate::error::Result;
use crate::geometry::{Position, Vec2};
use crate::rbpf::BeliefState;

/// Shortest ascent step tried before giving up on a non-improving direction.
const MIN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSolution {
    pub control: ControlInput,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    /// The returned commands satisfy the separation constraint.
    pub feasible: bool,
    pub min_distance: f64,
}

/// Unit commands from each active robot toward `target`; zero where the
/// direction is undefined.
pub fn toward(target: Position, robots: &[Position], active: &[bool], step_len: f64) -> ControlInput {
    let steps = robots
        .iter()
        .zip(active)
        .map(|(&r, &a)| match (a, (target - r).normalized(1e-9)) {
            (true, Some(u)) => u * step_len,
            _ => Vec2::ZERO,
        })
        .collect();
    ControlInput {
        steps,
        active: active.to_vec(),
    }
}

struct Iterate {
    projection: Projection,
    value: f64,
}

impl Iterate {
    fn beats(&self, other: &Iterate) -> bool {
        match (self.projection.feasible, other.projection.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.value > other.value,
            (false, false) => self.projection.min_distance > other.projection.min_distance,
        }
    }
}

/// Projected gradient ascent on `objective`, started from the unit commands
/// toward `source_estimate`.
///
/// Each iteration takes a step of length `ascent_step` along the gradient
/// (restricted to directions tangent to the step-length circle) and projects.
/// A non-improving step halves the step length; an improving step smaller than
/// `tol` ends the search. The best feasible iterate is returned.
pub fn ascend(
    objective: &MiObjective,
    robot_estimate: &[Position],
    source_estimate: Position,
    cfg: &ExperimentConfig,
) -> ControlSolution {
    let active = &objective.active;
    let step_len = cfg.motion.step_len;
    let project = |c: &ControlInput| project_controls(c, robot_estimate, cfg.d_min, step_len);

    let start = project(&toward(source_estimate, robot_estimate, active, step_len));
    let initial_objective = objective.value(&start.control);
    let mut best = Iterate {
        projection: start,
        value: initial_objective,
    };
    let mut step = cfg.planner.ascent_step;
    let mut iterations = 0;
    let mut gradient = objective.value_and_gradient(&best.projection.control).1;

    while iterations < cfg.planner.max_iters {
        iterations += 1;
        let current = &best.projection.control;
        let mut direction: Vec<Vec2> = current
            .steps
            .iter()
            .zip(&gradient)
            .zip(active)
            .map(|((&c, &g), &a)| {
                if !a {
                    return Vec2::ZERO;
                }
                match c.normalized(1e-12) {
                    Some(u) => g - u * g.dot(u),
                    None => g,
                }
            })
            .collect();
        let norm = direction.iter().map(|d| d.norm_squared()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            break;
        }
        direction.iter_mut().for_each(|d| *d = *d * (step / norm));
        let candidate = ControlInput {
            steps: current.steps.iter().zip(&direction).map(|(&c, &d)| c + d).collect(),
            active: active.clone(),
        };
        let projection = project(&candidate);
        let (value, next_gradient) = objective.value_and_gradient(&projection.control);
        let next = Iterate { projection, value };
        if next.beats(&best) {
            let gain = next.value - best.value;
            let both_feasible = next.projection.feasible && best.projection.feasible;
            best = next;
            gradient = next_gradient;
            if both_feasible && gain < cfg.planner.tol {
                break;
            }
        } else {
            step *= 0.5;
            if step < MIN_STEP {
                break;
            }
        }
    }

    ControlSolution {
        objective: best.value,
        initial_objective,
        iterations,
        feasible: best.projection.feasible,
        min_distance: best.projection.min_distance,
        control: best.projection.control,
    }
}

/// Information-seeking commands for the joint belief.
pub fn solve_control<R: Rng + ?Sized>(
    belief: &BeliefState,
    cfg: &ExperimentConfig,
    active: &[bool],
    rng: &mut R,
) -> Result<ControlSolution> {
    let objective = MiObjective::from_belief_capped(belief, &cfg.env, active, &cfg.planner, rng);
    Ok(ascend(&objective, &belief.robot_estimate(), belief.source_estimate(), cfg))
}
