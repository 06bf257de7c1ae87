//! Particle-weighted predicted mutual information between the source
//! position and the next cycle's source-to-robot measurements, and its
//! analytic gradient with respect to the control commands.

use rand::Rng;

use super::mixture::{pairwise_single_component_offset, LN_2PI};
use crate::config::{EnvParams, PlannerParams};
use crate::control::ControlInput;
use crate::geometry::{Position, Vec2};
use crate::measurement::RANGE_FLOOR;
use crate::rbpf::{BeliefState, RobotParticle};
use crate::resampling::systematic_indices;

/// One robot hypothesis with its conditional source belief, as seen by the
/// planner. Weights are frozen at their current values.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningHypothesis {
    pub weight: f64,
    pub robots: Vec<Position>,
    pub sources: Vec<Position>,
    pub source_weights: Vec<f64>,
}

impl PlanningHypothesis {
    pub fn from_particle(p: &RobotParticle) -> Self {
        Self {
            weight: p.weight,
            robots: p.robots.clone(),
            sources: p.sources.iter().map(|s| s.pos).collect(),
            source_weights: p.sources.iter().map(|s| s.weight).collect(),
        }
    }
}

/// The planning objective: belief snapshot, environment and active mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MiObjective {
    pub hypotheses: Vec<PlanningHypothesis>,
    pub env: EnvParams,
    pub active: Vec<bool>,
}

/// Selects at most `cap` entries by systematic sampling on `weights` and
/// merges repeated picks. Returns `(index, weight)` pairs with weights
/// summing to one. Below the cap every entry is kept with its own weight.
pub fn subsample_by_weight<R: Rng + ?Sized>(weights: &[f64], cap: Option<usize>, rng: &mut R) -> Vec<(usize, f64)> {
    match cap {
        Some(cap) if weights.len() > cap => {
            let picks = systematic_indices(weights, cap, rng);
            let unit = 1.0 / cap as f64;
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(cap);
            for i in picks {
                match out.last_mut() {
                    Some((last, w)) if *last == i => *w += unit,
                    _ => out.push((i, unit)),
                }
            }
            out
        }
        _ => {
            let total: f64 = weights.iter().sum();
            weights.iter().enumerate().map(|(i, &w)| (i, w / total)).collect()
        }
    }
}

impl MiObjective {
    /// Uses every particle at both levels.
    pub fn from_belief(belief: &BeliefState, env: &EnvParams, active: &[bool]) -> Self {
        Self {
            hypotheses: belief.particles.iter().map(PlanningHypothesis::from_particle).collect(),
            env: *env,
            active: active.to_vec(),
        }
    }

    /// Applies the planner's caps on robot hypotheses and mixture size.
    pub fn from_belief_capped<R: Rng + ?Sized>(
        belief: &BeliefState,
        env: &EnvParams,
        active: &[bool],
        planner: &PlannerParams,
        rng: &mut R,
    ) -> Self {
        let outer = subsample_by_weight(&belief.outer_weights(), planner.planning_particles, rng);
        let hypotheses = outer
            .into_iter()
            .map(|(i, weight)| {
                let p = &belief.particles[i];
                let inner_w: Vec<f64> = p.source_weights().collect();
                let inner = subsample_by_weight(&inner_w, planner.mixture_cap, rng);
                PlanningHypothesis {
                    weight,
                    robots: p.robots.clone(),
                    sources: inner.iter().map(|&(j, _)| p.sources[j].pos).collect(),
                    source_weights: inner.iter().map(|&(_, w)| w).collect(),
                }
            })
            .collect();
        Self {
            hypotheses,
            env: *env,
            active: active.to_vec(),
        }
    }

    pub fn num_robots(&self) -> usize {
        self.active.len()
    }

    pub fn value(&self, control: &ControlInput) -> f64 {
        self.hypotheses
            .iter()
            .map(|h| h.weight * hypothesis_mi(h, &self.env, &control.steps, None))
            .sum()
    }

    /// Objective value and its gradient with respect to every robot's command
    /// (including inactive robots).
    pub fn value_and_gradient(&self, control: &ControlInput) -> (f64, Vec<Vec2>) {
        let mut grad = vec![Vec2::ZERO; self.num_robots()];
        let mut scratch = vec![Vec2::ZERO; self.num_robots()];
        let mut value = 0.0;
        for h in &self.hypotheses {
            scratch.iter_mut().for_each(|g| *g = Vec2::ZERO);
            value += h.weight * hypothesis_mi(h, &self.env, &control.steps, Some(&mut scratch));
            for (g, s) in grad.iter_mut().zip(&scratch) {
                *g += *s * h.weight;
            }
        }
        (value, grad)
    }
}

pub fn predicted_mutual_information(ctx: &MiObjective, control: &ControlInput) -> f64 {
    ctx.value(control)
}

pub fn mi_gradient(ctx: &MiObjective, control: &ControlInput) -> Vec<Vec2> {
    ctx.value_and_gradient(control).1
}

/// Mutual information for one robot hypothesis: the bias-corrected pairwise
/// mixture entropy minus the conditional entropy. When `grad` is given, the
/// derivative with respect to each command is accumulated into it.
fn hypothesis_mi(h: &PlanningHypothesis, env: &EnvParams, steps: &[Vec2], grad: Option<&mut [Vec2]>) -> f64 {
    let k = h.robots.len();
    let m = h.sources.len();
    let predicted: Vec<Vec2> = h.robots.iter().zip(steps).map(|(&p, &c)| p + c).collect();

    // Row-major [j * k + robot].
    let mut range = vec![0.0; m * k];
    let mut mean = vec![0.0; m * k];
    let mut var = vec![0.0; m * k];
    for (j, &s) in h.sources.iter().enumerate() {
        for (q, &p) in predicted.iter().enumerate() {
            let r = s.distance(p).max(RANGE_FLOOR);
            range[j * k + q] = r;
            mean[j * k + q] = env.alpha0 + env.alpha * r;
            var[j * k + q] = r * env.sigma_z_sq;
        }
    }
    let log_w: Vec<f64> = h.source_weights.iter().map(|w| w.ln()).collect();

    // Symmetric matrix of ln N(mu_j; mu_l, S_j + S_l).
    let mut log_g = vec![0.0; m * m];
    for j in 0..m {
        for l in j..m {
            let mut acc = 0.0;
            for q in 0..k {
                let d = mean[j * k + q] - mean[l * k + q];
                let s = var[j * k + q] + var[l * k + q];
                acc -= 0.5 * (LN_2PI + s.ln()) + d * d / (2.0 * s);
            }
            log_g[j * m + l] = acc;
            log_g[l * m + j] = acc;
        }
    }

    // Row log-normalizers L_j = ln sum_l w_l g_jl.
    let mut row_lse = vec![0.0; m];
    let mut h_pair = 0.0;
    for j in 0..m {
        let row = &log_g[j * m..(j + 1) * m];
        let max = row
            .iter()
            .zip(&log_w)
            .map(|(g, w)| g + w)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().zip(&log_w).map(|(g, w)| (g + w - max).exp()).sum();
        row_lse[j] = max + sum.ln();
        h_pair -= h.source_weights[j] * row_lse[j];
    }

    let mut h_cond = 0.0;
    for j in 0..m {
        let log_det: f64 = var[j * k..(j + 1) * k].iter().map(|v| v.ln()).sum();
        h_cond += h.source_weights[j] * 0.5 * (k as f64 * (LN_2PI + 1.0) + log_det);
    }

    let mi = h_pair + pairwise_single_component_offset(k) - h_cond;

    if let Some(grad) = grad {
        // d MI / d r_{j,q}
        let mut d_range = vec![0.0; m * k];
        let (alpha, sz) = (env.alpha, env.sigma_z_sq);
        for j in 0..m {
            let wj = h.source_weights[j];
            for l in 0..m {
                // -w_j * responsibility of l in row j
                let coef = -wj * (log_w[l] + log_g[j * m + l] - row_lse[j]).exp();
                if coef == 0.0 {
                    continue;
                }
                for q in 0..k {
                    let d = mean[j * k + q] - mean[l * k + q];
                    let s = var[j * k + q] + var[l * k + q];
                    let d_mean = -d / s;
                    let d_var = -0.5 / s + d * d / (2.0 * s * s);
                    d_range[j * k + q] += coef * (alpha * d_mean + sz * d_var);
                    d_range[l * k + q] += coef * (-alpha * d_mean + sz * d_var);
                }
            }
            for q in 0..k {
                d_range[j * k + q] -= wj / (2.0 * range[j * k + q]);
            }
        }
        for (j, &s) in h.sources.iter().enumerate() {
            for q in 0..k {
                let r = range[j * k + q];
                let offset = predicted[q] - s;
                if offset.norm() > RANGE_FLOOR {
                    grad[q] += offset * (d_range[j * k + q] / r);
                }
            }
        }
    }
    mi
}
