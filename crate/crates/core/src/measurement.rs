//! Range measurement model.
//!
//! A measurement between two nodes at true range `r` is Gaussian with mean
//! `alpha0 + alpha * r` and variance `r * sigma_z_sq`. All measurements of a
//! cycle are conditionally independent given the positions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::EnvParams;
use crate::error::{Result, SlassError};
use crate::geometry::Position;

/// Ranges below this are clamped in both mean and variance so that the
/// density stays proper when hypotheses coincide.
pub const RANGE_FLOOR: f64 = 1e-3;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// All range measurements of one control cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    /// `source_to_robot[k]`: source to robot `k`.
    pub source_to_robot: Vec<f64>,
    /// Robot pairs `(k1, k2)` with `k1 < k2` in lexicographic order.
    pub robot_to_robot: Vec<f64>,
    pub cycle: usize,
}

impl MeasurementSet {
    pub fn num_robots(&self) -> usize {
        self.source_to_robot.len()
    }

    pub fn len(&self) -> usize {
        self.source_to_robot.len() + self.robot_to_robot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measurement between robots `a < b`.
    pub fn robot_pair(&self, a: usize, b: usize) -> f64 {
        self.robot_to_robot[pair_index(a, b, self.num_robots())]
    }

    fn check(&self, num_robots: usize) -> Result<()> {
        if self.source_to_robot.len() != num_robots || self.robot_to_robot.len() != num_pairs(num_robots) {
            return Err(SlassError::InvalidArgument(format!(
                "measurement set holds {} + {} values, expected {} + {} for {} robots",
                self.source_to_robot.len(),
                self.robot_to_robot.len(),
                num_robots,
                num_pairs(num_robots),
                num_robots
            )));
        }
        Ok(())
    }
}

pub fn num_pairs(num_robots: usize) -> usize {
    num_robots * num_robots.saturating_sub(1) / 2
}

/// Index of pair `(a, b)`, `a < b`, in lexicographic pair order.
pub fn pair_index(a: usize, b: usize, num_robots: usize) -> usize {
    debug_assert!(a < b && b < num_robots);
    a * (2 * num_robots - a - 1) / 2 + (b - a - 1)
}

/// Log-density of measurement `z` at true range `r`. No argument checks.
#[inline]
pub fn range_log_likelihood(z: f64, r: f64, env: &EnvParams) -> f64 {
    let r = r.max(RANGE_FLOOR);
    let var = r * env.sigma_z_sq;
    let d = z - (env.alpha0 + env.alpha * r);
    -0.5 * (LN_2PI + var.ln()) - d * d / (2.0 * var)
}

pub fn pair_log_likelihood(z: f64, p1: Position, p2: Position, env: &EnvParams) -> Result<f64> {
    if !z.is_finite() || !p1.is_finite() || !p2.is_finite() {
        return Err(SlassError::InvalidArgument(format!(
            "non-finite likelihood input: z = {z}, p1 = {p1:?}, p2 = {p2:?}"
        )));
    }
    Ok(range_log_likelihood(z, p1.distance(p2), env))
}

/// Sum of the robot-to-robot log-likelihood terms.
pub fn robot_links_log_likelihood(z: &MeasurementSet, robots: &[Position], env: &EnvParams) -> f64 {
    let k = robots.len();
    let mut sum = 0.0;
    let mut idx = 0;
    for a in 0..k {
        for b in (a + 1)..k {
            sum += range_log_likelihood(z.robot_to_robot[idx], robots[a].distance(robots[b]), env);
            idx += 1;
        }
    }
    sum
}

/// Sum of the source-to-robot log-likelihood terms.
pub fn source_links_log_likelihood(
    z: &MeasurementSet,
    source: Position,
    robots: &[Position],
    env: &EnvParams,
) -> f64 {
    robots
        .iter()
        .zip(&z.source_to_robot)
        .map(|(&p, &zk)| range_log_likelihood(zk, source.distance(p), env))
        .sum()
}

/// Joint log-likelihood of a full measurement set.
pub fn joint_log_likelihood(
    z: &MeasurementSet,
    source: Position,
    robots: &[Position],
    env: &EnvParams,
) -> Result<f64> {
    z.check(robots.len())?;
    let finite = source.is_finite()
        && robots.iter().all(|p| p.is_finite())
        && z.source_to_robot.iter().chain(&z.robot_to_robot).all(|v| v.is_finite());
    if !finite {
        return Err(SlassError::InvalidArgument("non-finite position or measurement".into()));
    }
    Ok(source_links_log_likelihood(z, source, robots, env) + robot_links_log_likelihood(z, robots, env))
}

/// Draws one measurement at true range `r`. Negative values are kept.
pub fn sample_range<R: Rng + ?Sized>(r: f64, env: &EnvParams, rng: &mut R) -> f64 {
    let r = r.max(RANGE_FLOOR);
    let n: f64 = rng.sample(StandardNormal);
    env.alpha0 + env.alpha * r + (r * env.sigma_z_sq).sqrt() * n
}

/// Draws the measurement set for the given true positions: the source links
/// in robot order, then the robot pairs in lexicographic order.
pub fn sample_measurements<R: Rng + ?Sized>(
    source: Position,
    robots: &[Position],
    env: &EnvParams,
    cycle: usize,
    rng: &mut R,
) -> MeasurementSet {
    let source_to_robot = robots
        .iter()
        .map(|&p| sample_range(source.distance(p), env, rng))
        .collect();
    let mut robot_to_robot = Vec::with_capacity(num_pairs(robots.len()));
    for a in 0..robots.len() {
        for b in (a + 1)..robots.len() {
            robot_to_robot.push(sample_range(robots[a].distance(robots[b]), env, rng));
        }
    }
    MeasurementSet {
        source_to_robot,
        robot_to_robot,
        cycle,
    }
}
