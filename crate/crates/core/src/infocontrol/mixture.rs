//! Gaussian mixtures over the predicted source-to-robot measurements, and
//! their entropies.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::EnvParams;
use crate::control::ControlInput;
use crate::measurement::RANGE_FLOOR;
use crate::rbpf::RobotParticle;
use crate::resampling::log_sum_exp;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// One diagonal Gaussian over the K predicted source-to-robot measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    pub variances: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub components: Vec<MixtureComponent>,
}

impl Mixture {
    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    /// Log-density of the mixture at `z`.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + diag_log_density(z, &c.mean, &c.variances))
            .collect();
        log_sum_exp(&terms)
    }
}

fn diag_log_density(z: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    z.iter()
        .zip(mean)
        .zip(var)
        .map(|((&z, &m), &v)| -0.5 * (LN_2PI + v.ln()) - (z - m) * (z - m) / (2.0 * v))
        .sum()
}

/// Predicted measurement mixture for one robot hypothesis after applying
/// `control`: one component per source hypothesis, carrying its weight, with
/// mean `alpha0 + alpha * r` and variance `r * sigma_z_sq` per robot, where
/// `r` is the range from the source hypothesis to the moved robot.
///
/// Only source-to-robot channels appear; robot-to-robot measurements carry no
/// information about the source once robot positions are conditioned on.
pub fn build_mixture(particle: &RobotParticle, control: &ControlInput, env: &EnvParams) -> Mixture {
    let predicted = control.apply(&particle.robots);
    let components = particle
        .sources
        .iter()
        .map(|s| {
            let ranges: Vec<f64> = predicted
                .iter()
                .map(|&p| s.pos.distance(p).max(RANGE_FLOOR))
                .collect();
            MixtureComponent {
                mean: ranges.iter().map(|r| env.alpha0 + env.alpha * r).collect(),
                variances: ranges.iter().map(|r| r * env.sigma_z_sq).collect(),
                weight: s.weight,
            }
        })
        .collect();
    Mixture { components }
}

/// Expected entropy of the measurement given the source, `sum_j w_j H(N_j)`.
pub fn gaussian_conditional_entropy(mixture: &Mixture) -> f64 {
    let k = mixture.dim() as f64;
    mixture
        .components
        .iter()
        .map(|c| c.weight * 0.5 * (k * (LN_2PI + 1.0) + c.variances.iter().map(|v| v.ln()).sum::<f64>()))
        .sum()
}

/// Pairwise-convolution entropy approximation:
///
/// ```text
/// H ~ -sum_j w_j ln sum_l w_l N(mu_j; mu_l, S_j + S_l)
/// ```
///
/// For a single component this evaluates to `0.5 ln((2 pi)^K prod 2 var_k)`,
/// which sits `K/2 (1 - ln 2)` nats below the exact Gaussian entropy.
pub fn mixture_entropy_pairwise(mixture: &Mixture) -> f64 {
    let comps = &mixture.components;
    let mut row = vec![0.0; comps.len()];
    let mut h = 0.0;
    for cj in comps {
        for (slot, cl) in row.iter_mut().zip(comps) {
            let var: Vec<f64> = cj.variances.iter().zip(&cl.variances).map(|(a, b)| a + b).collect();
            *slot = cl.weight.ln() + diag_log_density(&cj.mean, &cl.mean, &var);
        }
        h -= cj.weight * log_sum_exp(&row);
    }
    h
}

/// Gap between the exact entropy of a single K-dimensional Gaussian and its
/// pairwise-convolution approximation.
pub fn pairwise_single_component_offset(dim: usize) -> f64 {
    0.5 * dim as f64 * (1.0 - std::f64::consts::LN_2)
}

/// Monte Carlo entropy estimate `-(1/S) sum_s ln p(z_s)` with `z_s` drawn from
/// the mixture.
pub fn mixture_entropy_monte_carlo<R: Rng + ?Sized>(mixture: &Mixture, samples: usize, rng: &mut R) -> f64 {
    let weights: Vec<f64> = mixture.components.iter().map(|c| c.weight).collect();
    let total: f64 = weights.iter().sum();
    let mut z = vec![0.0; mixture.dim()];
    let mut acc = 0.0;
    for _ in 0..samples {
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (j, &w) in weights.iter().enumerate() {
            if u < w {
                pick = j;
                break;
            }
            u -= w;
        }
        let c = &mixture.components[pick];
        for ((zk, &m), &v) in z.iter_mut().zip(&c.mean).zip(&c.variances) {
            let n: f64 = rng.sample(StandardNormal);
            *zk = m + v.sqrt() * n;
        }
        acc -= mixture.log_density(&z);
    }
    acc / samples as f64
}
