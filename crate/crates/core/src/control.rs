use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Per-robot displacement commands for one control cycle.
///
/// Robots that have arrived at the source are inactive: their command is zero
/// and they do not move, but they keep measuring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub steps: Vec<Vec2>,
    pub active: Vec<bool>,
}

impl ControlInput {
    pub fn zeros(active: &[bool]) -> Self {
        Self {
            steps: vec![Vec2::ZERO; active.len()],
            active: active.to_vec(),
        }
    }

    pub fn num_robots(&self) -> usize {
        self.steps.len()
    }

    /// Largest deviation of an active command's norm from `step_len`, and of an
    /// inactive command's norm from zero.
    pub fn norm_violation(&self, step_len: f64) -> f64 {
        self.steps
            .iter()
            .zip(&self.active)
            .map(|(c, &a)| if a { (c.norm() - step_len).abs() } else { c.norm() })
            .fold(0.0, f64::max)
    }

    /// Predicted positions `positions[k] + steps[k]`.
    pub fn apply(&self, positions: &[Vec2]) -> Vec<Vec2> {
        positions.iter().zip(&self.steps).map(|(&p, &c)| p + c).collect()
    }
}

/// Smallest distance over robot pairs that involve at least one active robot.
/// Returns `f64::INFINITY` when there is no such pair.
pub fn min_constrained_distance(positions: &[Vec2], active: &[bool]) -> f64 {
    let mut min = f64::INFINITY;
    for a in 0..positions.len() {
        for b in (a + 1)..positions.len() {
            if active[a] || active[b] {
                min = min.min(positions[a].distance(positions[b]));
            }
        }
    }
    min
}
