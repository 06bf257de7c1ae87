//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use slass::infocontrol::{predicted_mutual_information, MiObjective, Mixture, PlanningHypothesis};
use slass::measurement::MeasurementSet;
use slass::rbpf::{BeliefState, RobotParticle, SourceParticle};
use slass::{ControlInput, EnvParams, Vec2};

pub fn env() -> EnvParams {
    EnvParams {
        alpha0: 0.0,
        alpha: 1.0,
        sigma_z_sq: 0.1,
    }
}

/// Gaussian density written out directly, no log-space tricks.
pub fn density(z: f64, p: Vec2, q: Vec2, env: &EnvParams) -> f64 {
    let r = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt().max(1e-3);
    let mean = env.alpha0 + env.alpha * r;
    let var = r * env.sigma_z_sq;
    (-(z - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// Straight-line evaluation of the two-level weight recursion.
///
/// Returns `(outer, inner)` normalized weights: the inner weight of source
/// `j` under robot hypothesis `i` is proportional to its prior weight times
/// the source-to-robot likelihood, and the outer weight is proportional to
/// the prior weight times the robot-to-robot likelihood times the inner
/// normalizer.
pub fn brute_force_update(
    particles: &[RobotParticle],
    source_z: &[f64],
    pair_z: &[f64],
    env: &EnvParams,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = source_z.len();
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for p in particles {
        let mut robot_lik = 1.0;
        let mut idx = 0;
        for a in 0..k {
            for b in a + 1..k {
                robot_lik *= density(pair_z[idx], p.robots[a], p.robots[b], env);
                idx += 1;
            }
        }
        let raw: Vec<f64> = p
            .sources
            .iter()
            .map(|s| {
                let mut lik = 1.0;
                for a in 0..k {
                    lik *= density(source_z[a], s.pos, p.robots[a], env);
                }
                s.weight * lik
            })
            .collect();
        let total: f64 = raw.iter().sum();
        inner.push(raw.iter().map(|w| w / total).collect());
        outer.push(p.weight * robot_lik * total);
    }
    let total: f64 = outer.iter().sum();
    (outer.iter().map(|w| w / total).collect(), inner)
}

pub fn belief(particles: Vec<RobotParticle>) -> BeliefState {
    BeliefState { particles, cycle: 1 }
}

pub fn particle(robots: Vec<Vec2>, weight: f64, sources: &[(Vec2, f64)]) -> RobotParticle {
    RobotParticle {
        robots,
        weight,
        sources: sources.iter().map(|&(pos, weight)| SourceParticle { pos, weight }).collect(),
    }
}

pub fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Random instance with measurements drawn near the particles so that the
/// direct products stay well inside double range.
pub fn random_instance(rng: &mut ChaCha8Rng, m_r: usize, m_s: usize, k: usize) -> (Vec<RobotParticle>, MeasurementSet) {
    let anchor: Vec<Vec2> = (0..k).map(|_| v(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0))).collect();
    let source = v(rng.random_range(20.0..60.0), rng.random_range(20.0..60.0));
    let particles = (0..m_r)
        .map(|_| {
            let robots = anchor.iter().map(|&p| p + v(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let sources: Vec<(Vec2, f64)> = (0..m_s)
                .map(|_| (source + v(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)), rng.random_range(0.1..1.0)))
                .collect();
            particle(robots, rng.random_range(0.1..1.0), &sources)
        })
        .collect::<Vec<_>>();
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            pairs.push(anchor[a].distance(anchor[b]) + rng.random_range(-0.5..0.5));
        }
    }
    let z = MeasurementSet {
        source_to_robot: anchor.iter().map(|&p| p.distance(source) + rng.random_range(-1.0..1.0)).collect(),
        robot_to_robot: pairs,
        cycle: 1,
    };
    (particles, z)
}

pub fn normalized(ps: &mut [RobotParticle]) {
    let total: f64 = ps.iter().map(|p| p.weight).sum();
    for p in ps.iter_mut() {
        p.weight /= total;
        let inner: f64 = p.sources.iter().map(|s| s.weight).sum();
        for s in &mut p.sources {
            s.weight /= inner;
        }
    }
}

pub fn unit(angle: f64) -> Vec2 {
    Vec2::new(angle.cos(), angle.sin())
}

pub fn random_objective(rng: &mut ChaCha8Rng, k: usize, m_r: usize, m_s: usize) -> MiObjective {
    let base: Vec<Vec2> = (0..k).map(|_| v(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0))).collect();
    let hypotheses = (0..m_r)
        .map(|_| PlanningHypothesis {
            weight: rng.random_range(0.1..1.0),
            robots: base.iter().map(|&p| p + v(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect(),
            sources: (0..m_s).map(|_| v(rng.random_range(10.0..120.0), rng.random_range(10.0..120.0))).collect(),
            source_weights: {
                let w: Vec<f64> = (0..m_s).map(|_| rng.random_range(0.05..1.0)).collect();
                let t: f64 = w.iter().sum();
                w.iter().map(|x| x / t).collect()
            },
        })
        .collect::<Vec<_>>();
    let total: f64 = hypotheses.iter().map(|h| h.weight).sum();
    MiObjective {
        hypotheses: hypotheses
            .into_iter()
            .map(|mut h| {
                h.weight /= total;
                h
            })
            .collect(),
        env: env(),
        active: vec![true; k],
    }
}

pub fn random_control(rng: &mut ChaCha8Rng, k: usize) -> ControlInput {
    ControlInput {
        steps: (0..k).map(|_| unit(rng.random_range(0.0..std::f64::consts::TAU))).collect(),
        active: vec![true; k],
    }
}

pub fn finite_difference(ctx: &MiObjective, control: &ControlInput, h: f64) -> Vec<Vec2> {
    let eval = |robot: usize, axis: usize, delta: f64| {
        let mut c = control.clone();
        if axis == 0 {
            c.steps[robot].x += delta;
        } else {
            c.steps[robot].y += delta;
        }
        predicted_mutual_information(ctx, &c)
    };
    (0..control.num_robots())
        .map(|q| {
            Vec2::new(
                (eval(q, 0, h) - eval(q, 0, -h)) / (2.0 * h),
                (eval(q, 1, h) - eval(q, 1, -h)) / (2.0 * h),
            )
        })
        .collect()
}

/// Relative error of the analytic gradient against central differences.
/// A 1e-5 central difference on an objective of order one carries round-off
/// near 1e-11, so gradients are measured against a scale of at least
/// `FLAT_SCALE`; flat instances (single source hypothesis) then still have to
/// match to about 1e-10 in absolute terms.
pub fn gradient_error(analytic: &[Vec2], fd: &[Vec2]) -> f64 {
    const FLAT_SCALE: f64 = 1e-5;
    let diff: f64 = analytic.iter().zip(fd).map(|(a, b)| (*a - *b).norm_squared()).sum::<f64>().sqrt();
    let scale: f64 = fd.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
    diff / scale.max(FLAT_SCALE)
}

/// Exact mutual information of a 1-D mixture by quadrature.
pub fn quadrature_mi(mixture: &Mixture) -> f64 {
    let lo = mixture.components.iter().map(|c| c.mean[0] - 15.0 * c.variances[0].sqrt()).fold(f64::INFINITY, f64::min);
    let hi = mixture.components.iter().map(|c| c.mean[0] + 15.0 * c.variances[0].sqrt()).fold(f64::NEG_INFINITY, f64::max);
    let h_z = simpson(
        |z| {
            let p = mixture.log_density(&[z]).exp();
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        },
        lo,
        hi,
        200_000,
    );
    let h_cond: f64 = mixture
        .components
        .iter()
        .map(|c| c.weight * 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * c.variances[0]).ln())
        .sum();
    h_z - h_cond
}
