mod common;

use common::{
    belief, env, finite_difference, gradient_error, particle, quadrature_mi, random_control, random_objective, unit, v,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slass::control::min_constrained_distance;
use slass::infocontrol::{
    ascend, build_mixture, mi_gradient, mixture_entropy_monte_carlo, mixture_entropy_pairwise, normalize_steps,
    predicted_mutual_information, project_controls, solve_control, toward, MiObjective, Mixture, MixtureComponent,
    PlanningHypothesis,
};
use slass::{default_paper_config, ControlInput, Vec2};

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        for k in 1..=3 {
            for m_r in [1, 3] {
                for m_s in [1, 4, 16] {
                    if count == 100 {
                        break;
                    }
                    let ctx = random_objective(&mut rng, k, m_r, m_s);
                    let control = random_control(&mut rng, k);
                    let g = mi_gradient(&ctx, &control);
                    let fd = finite_difference(&ctx, &control, 1e-5);
                    worst = worst.max(gradient_error(&g, &fd));
                    count += 1;
                }
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn single_source_hypothesis_has_zero_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 1..=3 {
        let ctx = random_objective(&mut rng, k, 3, 1);
        let control = random_control(&mut rng, k);
        assert!(predicted_mutual_information(&ctx, &control).abs() < 1e-9);
        assert!(mi_gradient(&ctx, &control).iter().all(|g| g.norm() < 1e-9));
    }
}

#[test]
fn coincident_sources_have_zero_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ctx = random_objective(&mut rng, 2, 2, 5);
    for h in &mut ctx.hypotheses {
        let p = h.sources[0];
        h.sources.iter_mut().for_each(|s| *s = p);
    }
    let control = random_control(&mut rng, 2);
    assert!(predicted_mutual_information(&ctx, &control).abs() < 1e-9);
}

#[test]
fn far_separated_pair_carries_one_binary_symbol() {
    let env = env();
    let p = particle(vec![v(0.0, 0.0)], 1.0, &[(v(20.0, 0.0), 0.5), (v(60.0, 0.0), 0.5)]);
    let control = ControlInput {
        steps: vec![v(0.0, 1.0)],
        active: vec![true],
    };
    let mixture = build_mixture(&p, &control, &env);
    let sep = (mixture.components[1].mean[0] - mixture.components[0].mean[0]).abs();
    assert!(sep >= 10.0 * mixture.components[1].variances[0].sqrt());

    let oracle = quadrature_mi(&mixture);
    let ln2 = std::f64::consts::LN_2;
    assert!((oracle / ln2 - 1.0).abs() < 0.05, "oracle {oracle}");

    let b = belief(vec![p]);
    let ctx = MiObjective::from_belief(&b, &env, &[true]);
    let mi = predicted_mutual_information(&ctx, &control);
    assert!((mi / ln2 - 1.0).abs() < 0.05, "mi {mi}");
}

#[test]
fn pairwise_entropy_tracks_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..3 {
        let n = rng.random_range(2..=5);
        let mut components = Vec::new();
        let mut mean = rng.random_range(10.0..30.0);
        for _ in 0..n {
            let var = mean * 0.1;
            components.push(MixtureComponent {
                mean: vec![mean],
                variances: vec![var],
                weight: rng.random_range(0.2..1.0),
            });
            mean += rng.random_range(6.0..12.0) * var.sqrt() + 3.0;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        components.iter_mut().for_each(|c| c.weight /= total);
        let mixture = Mixture { components };
        let mc = mixture_entropy_monte_carlo(&mixture, 1_000_000, &mut rng);
        let pw = mixture_entropy_pairwise(&mixture);
        assert!((pw / mc - 1.0).abs() < 0.10, "pairwise {pw} vs mc {mc}");
    }
}

#[test]
fn objective_is_translation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let ctx = random_objective(&mut rng, 3, 3, 6);
    let control = random_control(&mut rng, 3);
    let shift = v(-37.5, 212.0);
    let mut moved = ctx.clone();
    for h in &mut moved.hypotheses {
        h.robots.iter_mut().for_each(|p| *p += shift);
        h.sources.iter_mut().for_each(|p| *p += shift);
    }
    let a = predicted_mutual_information(&ctx, &control);
    let b = predicted_mutual_information(&moved, &control);
    assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
}

#[test]
fn mirror_symmetric_setup_has_no_normal_gradient() {
    // Robot on the x-axis, sources mirrored across it, control along the axis.
    let ctx = MiObjective {
        hypotheses: vec![PlanningHypothesis {
            weight: 1.0,
            robots: vec![v(0.0, 0.0)],
            sources: vec![v(30.0, 10.0), v(30.0, -10.0), v(50.0, 0.0)],
            source_weights: vec![0.3, 0.3, 0.4],
        }],
        env: env(),
        active: vec![true],
    };
    let control = ControlInput {
        steps: vec![v(1.0, 0.0)],
        active: vec![true],
    };
    let g = mi_gradient(&ctx, &control);
    assert!(g[0].y.abs() < 1e-9, "{:?}", g[0]);
}

#[test]
fn ascent_never_loses_to_its_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = default_paper_config(3);
    for _ in 0..30 {
        let k = rng.random_range(1..=3);
        let ctx = random_objective(&mut rng, k, 3, 16);
        let robots = ctx.hypotheses[0].robots.clone();
        let target = v(rng.random_range(0.0..150.0), rng.random_range(0.0..150.0));
        let sol = ascend(&ctx, &robots, target, &cfg);
        assert!(sol.objective >= sol.initial_objective - 1e-9);
        assert!((predicted_mutual_information(&ctx, &sol.control) - sol.objective).abs() < 1e-12);
        assert!(sol.control.norm_violation(1.0) < 1e-9);
        if sol.feasible {
            assert!(min_constrained_distance(&sol.control.apply(&robots), &ctx.active) >= cfg.d_min - 1e-6);
        }
    }
}

#[test]
fn zero_information_returns_the_toward_direction() {
    let cfg = default_paper_config(1);
    let b = belief(vec![particle(vec![v(0.0, 0.0)], 1.0, &[(v(100.0, 100.0), 1.0)])]);
    let sol = solve_control(&b, &cfg, &[true], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((sol.control.steps[0] - v(h, h)).norm() < 1e-12);
}

#[test]
fn bimodal_belief_beats_heading_for_the_mean() {
    let cfg = default_paper_config(1);
    let mut sources = Vec::new();
    for i in 0..8 {
        let t = i as f64 * 0.7;
        sources.push((v(60.0 + t.cos(), 10.0 + t.sin()), 1.0 / 16.0));
        sources.push((v(10.0 + t.sin(), 60.0 + t.cos()), 1.0 / 16.0));
    }
    let b = belief(vec![particle(vec![v(0.0, 0.0)], 1.0, &sources)]);
    let sol = solve_control(&b, &cfg, &[true], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let ctx = MiObjective::from_belief(&b, &cfg.env, &[true]);
    let straight = toward(b.source_estimate(), &[v(0.0, 0.0)], &[true], 1.0);
    assert!(sol.objective >= predicted_mutual_information(&ctx, &straight) - 1e-9);
    assert!(sol.objective > sol.initial_objective);
}

#[test]
fn head_on_pair_is_separated() {
    let positions = [v(0.0, 0.0), v(4.5, 0.0)];
    let c = ControlInput {
        steps: vec![v(1.0, 0.0), v(-1.0, 0.0)],
        active: vec![true, true],
    };
    let p = project_controls(&c, &positions, 4.0, 1.0);
    assert!(p.feasible);
    assert!(min_constrained_distance(&p.control.apply(&positions), &c.active) >= 4.0 - 1e-6);
}

fn arb_setup() -> impl Strategy<Value = (Vec<Vec2>, Vec<Vec2>, Vec<bool>)> {
    (2usize..=4).prop_flat_map(|k| {
        (
            prop::collection::vec((0.0..14.0f64, 0.0..14.0f64).prop_map(|(x, y)| Vec2::new(x, y)), k),
            prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y)), k),
            prop::collection::vec(prop::bool::weighted(0.8), k),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_keeps_norms_and_never_shrinks_separation((positions, steps, active) in arb_setup()) {
        let candidate = ControlInput { steps, active: active.clone() };
        let p = project_controls(&candidate, &positions, 4.0, 1.0);
        for (s, &a) in p.control.steps.iter().zip(&active) {
            if a {
                prop_assert!(s.norm() == 0.0 || (s.norm() - 1.0).abs() < 1e-9);
            } else {
                prop_assert_eq!(*s, Vec2::ZERO);
            }
        }
        let before = min_constrained_distance(&normalize_steps(&candidate, 1.0).apply(&positions), &active);
        let after = min_constrained_distance(&p.control.apply(&positions), &active);
        prop_assert!((after - p.min_distance).abs() < 1e-12 || (after.is_infinite() && p.min_distance.is_infinite()));
        prop_assert!(after >= before.min(4.0) - 1e-9, "before {} after {}", before, after);
        if p.feasible {
            prop_assert!(after >= 4.0 - 1e-6);
        }
    }

    #[test]
    fn far_apart_controls_pass_through(angles in prop::collection::vec(0.0..std::f64::consts::TAU, 3)) {
        let positions = [v(0.0, 0.0), v(100.0, 0.0), v(0.0, 100.0)];
        let candidate = ControlInput { steps: angles.iter().map(|&a| unit(a)).collect(), active: vec![true; 3] };
        let p = project_controls(&candidate, &positions, 4.0, 1.0);
        for (a, b) in p.control.steps.iter().zip(&candidate.steps) {
            prop_assert!((*a - *b).norm() < 1e-12);
        }
    }
}
