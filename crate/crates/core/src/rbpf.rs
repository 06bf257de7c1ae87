//! Rao-Blackwellized particle filter over the joint robot positions and the
//! source position.
//!
//! The outer particle set samples the joint robot state. Each outer particle
//! carries its own inner particle set over the source position, conditioned
//! on that robot hypothesis. The importance density is the transition prior,
//! so both levels are reweighted by the measurement likelihood alone:
//!
//! ```text
//! w(i,j) ~ w_prev(i,j) * p(z | robots(i), source(i,j))
//! w(i)   ~ w_prev(i)   * sum_j w_prev(i,j) * p(z | robots(i), source(i,j))
//! ```

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::config::{ExperimentConfig, MotionParams};
use crate::control::ControlInput;
use crate::error::{BeliefLevel, Result, SlassError};
use crate::geometry::{Position, Vec2};
use crate::measurement::{robot_links_log_likelihood, source_links_log_likelihood, MeasurementSet};
use crate::config::EnvParams;
use crate::resampling::{effective_sample_size, normalize_log_weights, systematic_indices};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParticle {
    pub pos: Position,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotParticle {
    pub robots: Vec<Position>,
    pub weight: f64,
    pub sources: Vec<SourceParticle>,
}

impl RobotParticle {
    pub fn source_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.sources.iter().map(|s| s.weight)
    }

    /// Weighted mean of this particle's source hypotheses.
    pub fn source_mean(&self) -> Position {
        let origin = self.sources[0].pos;
        origin
            + self
                .sources
                .iter()
                .fold(Vec2::ZERO, |acc, s| acc + (s.pos - origin) * s.weight)
    }
}

/// Which levels a call to [`BeliefState::resample`] resampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ResampleReport {
    pub outer: bool,
    pub inner_sets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub particles: Vec<RobotParticle>,
    pub cycle: usize,
}

/// Uniform draw over the configured area.
pub fn uniform_in_area<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Position {
    let a = &cfg.area;
    Vec2::new(
        a.min.x + rng.random::<f64>() * a.width(),
        a.min.y + rng.random::<f64>() * a.height(),
    )
}

/// Weighted mean accumulated as offsets from the first point, so a point mass
/// is reproduced exactly.
pub(crate) fn weighted_mean(points: &[Position], weights: impl Iterator<Item = f64>) -> Position {
    let origin = points[0];
    origin
        + points
            .iter()
            .zip(weights)
            .fold(Vec2::ZERO, |acc, (&p, w)| acc + (p - origin) * w)
}

pub(crate) fn gaussian_jitter<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Vec2 {
    if var <= 0.0 {
        return Vec2::ZERO;
    }
    let sd = var.sqrt();
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Vec2::new(sd * x, sd * y)
}

impl BeliefState {
    /// Robot hypotheses start at the known starting positions; source
    /// hypotheses are uniform over the area. Weights are uniform at both levels.
    pub fn init<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Self {
        let ws = 1.0 / cfg.source_particles as f64;
        let wr = 1.0 / cfg.robot_particles as f64;
        let particles = (0..cfg.robot_particles)
            .map(|_| RobotParticle {
                robots: cfg.robot_starts.clone(),
                weight: wr,
                sources: (0..cfg.source_particles)
                    .map(|_| SourceParticle {
                        pos: uniform_in_area(cfg, rng),
                        weight: ws,
                    })
                    .collect(),
            })
            .collect();
        Self { particles, cycle: 1 }
    }

    pub fn num_robots(&self) -> usize {
        self.particles[0].robots.len()
    }

    pub fn outer_weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn outer_ess(&self) -> f64 {
        effective_sample_size(&self.outer_weights())
    }

    /// Propagates every hypothesis one cycle: robots move by their command plus
    /// per-axis control error (inactive robots stay put), source hypotheses
    /// are jittered. Weights are not touched.
    pub fn predict<R: Rng + ?Sized>(&mut self, control: &ControlInput, motion: &MotionParams, rng: &mut R) {
        for p in &mut self.particles {
            for (k, pos) in p.robots.iter_mut().enumerate() {
                if control.active[k] {
                    *pos += control.steps[k] + gaussian_jitter(motion.sigma_c_sq, rng);
                }
            }
            if motion.sigma_s_sq > 0.0 {
                let jitter = Normal::new(0.0, motion.sigma_s_sq.sqrt()).expect("finite variance");
                for s in &mut p.sources {
                    s.pos.x += jitter.sample(rng);
                    s.pos.y += jitter.sample(rng);
                }
            }
        }
        self.cycle += 1;
    }

    /// Reweights both levels with the cycle's measurements and normalizes.
    pub fn update_weights(&mut self, z: &MeasurementSet, env: &EnvParams) -> Result<()> {
        let degenerate = |level| SlassError::DegenerateBelief {
            cycle: z.cycle,
            level,
            stage: None,
        };
        let mut outer_log = Vec::with_capacity(self.particles.len());
        let mut inner = Vec::new();
        for p in &mut self.particles {
            let robot_ll = robot_links_log_likelihood(z, &p.robots, env);
            inner.clear();
            inner.extend(p.sources.iter().map(|s| source_links_log_likelihood(z, s.pos, &p.robots, env)));
            if robot_ll.is_nan() || inner.iter().any(|x| x.is_nan()) {
                return Err(degenerate(BeliefLevel::Source));
            }
            // w_j * exp(ll_j - max) with the max over supported hypotheses,
            // so prior weights never pass through a logarithm.
            let max = p
                .sources
                .iter()
                .zip(&inner)
                .filter(|(s, _)| s.weight > 0.0)
                .map(|(_, &ll)| ll)
                .fold(f64::NEG_INFINITY, f64::max);
            if !max.is_finite() {
                // No support: weights stay, the particle gets zero mass.
                outer_log.push(f64::NEG_INFINITY);
                continue;
            }
            let mut total = 0.0;
            for (s, ll) in p.sources.iter().zip(inner.iter_mut()) {
                *ll = s.weight * (*ll - max).exp();
                total += *ll;
            }
            for (s, &w) in p.sources.iter_mut().zip(&inner) {
                s.weight = w / total;
            }
            outer_log.push(p.weight.ln() + robot_ll + max + total.ln());
        }
        if normalize_log_weights(&mut outer_log).is_none() {
            return Err(degenerate(BeliefLevel::Robot));
        }
        for (p, &w) in self.particles.iter_mut().zip(&outer_log) {
            p.weight = w;
        }
        Ok(())
    }

    /// Systematic resampling of every level whose effective sample size is
    /// below `threshold` times its particle count. Resampling the outer level
    /// copies each selected particle together with its inner set.
    pub fn resample<R: Rng + ?Sized>(&mut self, threshold: f64, rng: &mut R) -> ResampleReport {
        let mut report = ResampleReport::default();
        let m_r = self.particles.len();
        let weights = self.outer_weights();
        if effective_sample_size(&weights) < threshold * m_r as f64 {
            let idx = systematic_indices(&weights, m_r, rng);
            let w = 1.0 / m_r as f64;
            self.particles = idx
                .into_iter()
                .map(|i| RobotParticle {
                    weight: w,
                    ..self.particles[i].clone()
                })
                .collect();
            report.outer = true;
        }
        for p in &mut self.particles {
            let m_s = p.sources.len();
            let weights: Vec<f64> = p.source_weights().collect();
            if effective_sample_size(&weights) < threshold * m_s as f64 {
                let idx = systematic_indices(&weights, m_s, rng);
                let w = 1.0 / m_s as f64;
                p.sources = idx
                    .into_iter()
                    .map(|j| SourceParticle {
                        pos: p.sources[j].pos,
                        weight: w,
                    })
                    .collect();
                report.inner_sets += 1;
            }
        }
        report
    }

    /// Posterior mean of the source position.
    pub fn source_estimate(&self) -> Position {
        let means: Vec<Position> = self.particles.iter().map(RobotParticle::source_mean).collect();
        weighted_mean(&means, self.particles.iter().map(|p| p.weight))
    }

    /// Posterior mean of every robot position.
    pub fn robot_estimate(&self) -> Vec<Position> {
        (0..self.num_robots())
            .map(|k| {
                let positions: Vec<Position> = self.particles.iter().map(|p| p.robots[k]).collect();
                weighted_mean(&positions, self.particles.iter().map(|p| p.weight))
            })
            .collect()
    }
}
