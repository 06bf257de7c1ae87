mod common;

use common::{belief, brute_force_update, env, normalized, particle, random_instance, v};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slass::measurement::{num_pairs, MeasurementSet};
use slass::rbpf::BeliefState;
use slass::resampling::systematic_indices;
use slass::{default_paper_config, ControlInput, Vec2};

#[test]
fn update_matches_brute_force_recursion() {
    let env = env();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for m_r in 1..=3 {
        for m_s in 1..=4 {
            for k in 1..=2 {
                for _ in 0..5 {
                    let (mut particles, z) = random_instance(&mut rng, m_r, m_s, k);
                    normalized(&mut particles);
                    let (outer, inner) = brute_force_update(&particles, &z.source_to_robot, &z.robot_to_robot, &env);
                    let mut b = belief(particles);
                    b.update_weights(&z, &env).unwrap();
                    for (i, p) in b.particles.iter().enumerate() {
                        worst = worst.max((p.weight - outer[i]).abs());
                        for (j, s) in p.sources.iter().enumerate() {
                            worst = worst.max((s.weight - inner[i][j]).abs());
                        }
                    }
                }
            }
        }
    }
    assert!(worst < 1e-12, "max deviation {worst:e}");
}

/// Range `r` in `[z, r_ref]` at which the density of `z` is `ratio` times its
/// value at `r_ref`, found by bisection on the decreasing branch.
fn range_with_ratio(z: f64, r_ref: f64, ratio: f64) -> f64 {
    let env = env();
    let dens = |r: f64| common::density(z, v(0.0, 0.0), v(r, 0.0), &env);
    let target = ratio * dens(r_ref);
    assert!(dens(z) > target);
    let (mut lo, mut hi) = (z, r_ref);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dens(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn single_link(z: f64) -> MeasurementSet {
    MeasurementSet {
        source_to_robot: vec![z],
        robot_to_robot: vec![],
        cycle: 1,
    }
}

#[test]
fn three_to_one_likelihood_gives_three_quarters() {
    let env = env();
    let r3 = range_with_ratio(50.0, 55.0, 3.0);
    let mut b = belief(vec![particle(vec![v(0.0, 0.0)], 1.0, &[(v(r3, 0.0), 0.5), (v(55.0, 0.0), 0.5)])]);
    b.update_weights(&single_link(50.0), &env).unwrap();
    assert!((b.particles[0].sources[0].weight - 0.75).abs() < 1e-12);
    assert!((b.particles[0].sources[1].weight - 0.25).abs() < 1e-12);
    assert!((b.particles[0].weight - 1.0).abs() < 1e-15);
}

#[test]
fn doubled_marginal_likelihood_doubles_the_outer_weight() {
    let env = env();
    let r2 = range_with_ratio(50.0, 55.0, 2.0);
    let robot = vec![v(0.0, 0.0)];
    let mut b = belief(vec![
        particle(robot.clone(), 0.5, &[(v(r2, 0.0), 1.0)]),
        particle(robot, 0.5, &[(v(55.0, 0.0), 1.0)]),
    ]);
    b.update_weights(&single_link(50.0), &env).unwrap();
    assert!((b.particles[0].weight - 2.0 / 3.0).abs() < 1e-12);
    assert!((b.particles[1].weight - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn degenerate_weights_are_reported() {
    let env = env();
    let mut b = belief(vec![particle(vec![v(0.0, 0.0)], 1.0, &[(v(10.0, 0.0), 1.0)])]);
    b.particles[0].weight = 0.0;
    let z = MeasurementSet {
        source_to_robot: vec![10.0],
        robot_to_robot: vec![],
        cycle: 7,
    };
    assert!(matches!(
        b.update_weights(&z, &env),
        Err(slass::SlassError::DegenerateBelief { cycle: 7, .. })
    ));
}

#[test]
fn systematic_resampling_is_unbiased() {
    let weights = [0.1, 0.25, 0.05, 0.4, 0.2];
    let n = 7;
    let seeds = 10_000;
    let mut counts = [0usize; 5];
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = systematic_indices(&weights, n, &mut rng);
        assert_eq!(idx.len(), n);
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        for i in idx {
            counts[i] += 1;
        }
    }
    for (c, w) in counts.iter().zip(weights) {
        let mean = *c as f64 / seeds as f64;
        let expected = n as f64 * w;
        // Per-seed copy counts differ from n w by less than one.
        let se = 0.5 / (seeds as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
    }
}

#[test]
fn resampling_preserves_the_source_mean_on_average() {
    let cfg = default_paper_config(1);
    let mut setup = ChaCha8Rng::seed_from_u64(5);
    let mut base = BeliefState::init(&cfg, &mut setup);
    // Skewed inner weights so that resampling actually fires.
    for (j, s) in base.particles[0].sources.iter_mut().enumerate() {
        s.weight = if j % 5 == 0 { 1.0 } else { 0.01 };
    }
    let total: f64 = base.particles[0].sources.iter().map(|s| s.weight).sum();
    for s in &mut base.particles[0].sources {
        s.weight /= total;
    }
    let before = base.particles[0].source_mean();
    let runs = 1000;
    let mut acc = Vec2::ZERO;
    let mut sq = 0.0;
    for seed in 0..runs {
        let mut b = base.clone();
        let report = b.resample(0.5, &mut ChaCha8Rng::seed_from_u64(seed));
        assert!(report.inner_sets > 0);
        let m = b.particles[0].source_mean();
        acc += m;
        sq += (m - before).norm_squared();
    }
    let mean = acc * (1.0 / runs as f64);
    let se = (sq / runs as f64 / runs as f64).sqrt();
    assert!((mean - before).norm() < 4.0 * se.max(1e-9), "{mean:?} vs {before:?} (se {se})");
}

#[test]
fn predict_with_zero_noise_moves_every_hypothesis_by_the_control() {
    let mut cfg = default_paper_config(2);
    cfg.motion.sigma_c_sq = 0.0;
    cfg.motion.sigma_s_sq = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut b = BeliefState::init(&cfg, &mut rng);
    let before = b.clone();
    let control = ControlInput {
        steps: vec![v(1.0, 0.0), v(0.0, -1.0)],
        active: vec![true, true],
    };
    b.predict(&control, &cfg.motion, &mut rng);
    for (p, q) in b.particles.iter().zip(&before.particles) {
        assert_eq!(p.robots[0], q.robots[0] + v(1.0, 0.0));
        assert_eq!(p.robots[1], q.robots[1] + v(0.0, -1.0));
        assert_eq!(p.sources, q.sources);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn update_is_invariant_to_prior_weight_scale(seed in any::<u64>(), scale in 1e-6..1e6f64) {
        let env = env();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut particles, z) = random_instance(&mut rng, 3, 4, 2);
        normalized(&mut particles);
        let mut scaled = particles.clone();
        for p in &mut scaled {
            p.weight *= scale;
            for s in &mut p.sources {
                s.weight *= scale;
            }
        }
        let mut a = belief(particles);
        let mut b = belief(scaled);
        a.update_weights(&z, &env).unwrap();
        b.update_weights(&z, &env).unwrap();
        for (p, q) in a.particles.iter().zip(&b.particles) {
            prop_assert!((p.weight - q.weight).abs() < 1e-12);
            for (s, t) in p.sources.iter().zip(&q.sources) {
                prop_assert!((s.weight - t.weight).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_stay_normalized_through_a_cycle(seed in any::<u64>(), k in 1usize..4) {
        let env = env();
        let mut cfg = default_paper_config(k);
        cfg.robot_particles = 6;
        cfg.source_particles = 9;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = BeliefState::init(&cfg, &mut rng);
        let z = slass::measurement::sample_measurements(cfg.source_true, &cfg.robot_starts, &env, 1, &mut rng);
        prop_assert_eq!(z.robot_to_robot.len(), num_pairs(k));
        b.update_weights(&z, &env).unwrap();
        b.resample(cfg.ess_threshold, &mut rng);
        let outer: f64 = b.particles.iter().map(|p| p.weight).sum();
        prop_assert!((outer - 1.0).abs() < 1e-9);
        for p in &b.particles {
            let inner: f64 = p.sources.iter().map(|s| s.weight).sum();
            prop_assert!((inner - 1.0).abs() < 1e-9);
            prop_assert_eq!(p.sources.len(), 9);
        }
        prop_assert_eq!(b.particles.len(), 6);
    }
}
