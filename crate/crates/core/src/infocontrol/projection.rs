//! Projection of candidate commands onto the feasible set: fixed step length
//! for active robots and a minimum predicted separation between robots.

use std::f64::consts::PI;

use crate::control::{min_constrained_distance, ControlInput};
use crate::geometry::{Position, Vec2};

pub const MAX_SWEEPS: usize = 50;
const GRID: usize = 64;
const BISECTIONS: usize = 60;
/// Headings per robot tried by the fallback search.
const HEADINGS: usize = 720;
const COORDINATE_PASSES: usize = 20;
/// Repaired pairs are pushed this far past `d_min`.
const REPAIR_MARGIN: f64 = 1e-9;
/// Slack when testing whether a pair satisfies `d_min`.
const FEASIBLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub control: ControlInput,
    /// Smallest predicted distance over pairs with an active robot.
    pub min_distance: f64,
    pub feasible: bool,
    /// The current positions already violate `d_min`.
    pub start_violated: bool,
}

/// Rescales every active command to `step_len` (zero commands stay zero) and
/// zeroes inactive ones.
pub fn normalize_steps(candidate: &ControlInput, step_len: f64) -> ControlInput {
    let steps = candidate
        .steps
        .iter()
        .zip(&candidate.active)
        .map(|(&c, &a)| match (a, c.normalized(1e-12)) {
            (true, Some(u)) => u * step_len,
            _ => Vec2::ZERO,
        })
        .collect();
    ControlInput {
        steps,
        active: candidate.active.clone(),
    }
}

/// Projects `candidate` onto unit-step commands whose predicted positions keep
/// every constrained pair at least `d_min` apart.
///
/// Violated pairs are repaired by rotating both commands (only the active one
/// when the partner has arrived) by the smallest equal angle, toward the
/// direction pointing away from the partner, that restores `d_min`. Pair
/// repairs can undo each other when one robot is hemmed in by several
/// partners, so if [`MAX_SWEEPS`] sweeps do not reach feasibility each
/// offending robot is instead given the feasible heading closest to its
/// current one, one robot at a time. Failing that, the iterate with the
/// largest minimum separation is returned.
pub fn project_controls(candidate: &ControlInput, positions: &[Position], d_min: f64, step_len: f64) -> Projection {
    let active = &candidate.active;
    let start_violated = min_constrained_distance(positions, active) < d_min - FEASIBLE_SLACK;
    let mut tracker = Tracker {
        positions,
        d_min,
        best: None,
        best_dist: f64::NEG_INFINITY,
    };
    let k = positions.len();
    let violated = |steps: &[Vec2], a: usize, b: usize| {
        (active[a] || active[b]) && (positions[a] + steps[a]).distance(positions[b] + steps[b]) < d_min - FEASIBLE_SLACK
    };

    let mut current = normalize_steps(candidate, step_len);
    for sweep in 0..=MAX_SWEEPS {
        if tracker.accept(&current) {
            return tracker.finish(start_violated);
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        for a in 0..k {
            for b in (a + 1)..k {
                if violated(&current.steps, a, b) {
                    repair_pair(&mut current.steps, positions, active, a, b, d_min + REPAIR_MARGIN);
                }
            }
        }
    }

    let mut current = tracker.best.clone().expect("at least one iterate was checked");
    for _ in 0..COORDINATE_PASSES {
        for a in (0..k).filter(|&a| active[a]) {
            if (0..k).any(|b| b != a && violated(&current.steps, a.min(b), a.max(b))) {
                current.steps[a] = closest_clear_heading(&current.steps, positions, active, a, d_min + REPAIR_MARGIN);
            }
        }
        if tracker.accept(&current) {
            break;
        }
    }
    tracker.finish(start_violated)
}

/// Remembers the iterate with the largest minimum separation.
struct Tracker<'a> {
    positions: &'a [Position],
    d_min: f64,
    best: Option<ControlInput>,
    best_dist: f64,
}

impl Tracker<'_> {
    /// Records `c` and reports whether it is feasible. A feasible iterate
    /// always replaces the stored one.
    fn accept(&mut self, c: &ControlInput) -> bool {
        let dist = min_constrained_distance(&c.apply(self.positions), &c.active);
        let feasible = dist >= self.d_min - FEASIBLE_SLACK;
        if feasible || dist > self.best_dist {
            self.best_dist = dist;
            self.best = Some(c.clone());
        }
        feasible
    }

    fn finish(self, start_violated: bool) -> Projection {
        Projection {
            control: self.best.expect("at least one iterate was checked"),
            min_distance: self.best_dist,
            feasible: self.best_dist >= self.d_min - FEASIBLE_SLACK,
            start_violated,
        }
    }
}

/// Heading for robot `a` that keeps it `target` away from every other robot
/// under their current commands, rotated as little as possible from its
/// current command. Without such a heading, the one with the most clearance.
fn closest_clear_heading(steps: &[Vec2], positions: &[Position], active: &[bool], a: usize, target: f64) -> Vec2 {
    let len = steps[a].norm();
    let base = steps[a];
    let clearance = |theta: f64| {
        let p = positions[a] + base.rotated(theta);
        (0..positions.len())
            .filter(|&b| b != a)
            .map(|b| p.distance(positions[b] + if active[b] { steps[b] } else { Vec2::ZERO }))
            .fold(f64::INFINITY, f64::min)
    };
    if len == 0.0 {
        return base;
    }
    let step = 2.0 * PI / HEADINGS as f64;
    for i in 1..=HEADINGS / 2 {
        for sign in [1.0, -1.0] {
            let t = sign * i as f64 * step;
            if clearance(t) >= target {
                let (mut lo, mut hi) = (sign * (i - 1) as f64 * step, t);
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if clearance(mid) >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return base.rotated(hi);
            }
        }
    }
    let widest = (0..HEADINGS)
        .map(|i| i as f64 * step)
        .max_by(|&x, &y| clearance(x).total_cmp(&clearance(y)))
        .unwrap_or(0.0);
    base.rotated(widest)
}

fn clamp_angle(theta: f64, t: f64) -> f64 {
    theta.signum() * theta.abs().min(t)
}

fn repair_pair(steps: &mut [Vec2], positions: &[Position], active: &[bool], a: usize, b: usize, target: f64) {
    let offset = positions[a] - positions[b];
    let away = offset.normalized(1e-12).unwrap_or(Vec2::new(1.0, 0.0));
    let (ua, ub) = (steps[a], steps[b]);
    let theta_a = if active[a] { ua.angle_to(away) } else { 0.0 };
    let theta_b = if active[b] { ub.angle_to(-away) } else { 0.0 };
    let rotate = |t: f64| (ua.rotated(clamp_angle(theta_a, t)), ub.rotated(clamp_angle(theta_b, t)));
    let gap = |t: f64| {
        let (ra, rb) = rotate(t);
        (offset + ra - rb).norm()
    };

    let mut chosen = PI;
    let mut prev = 0.0;
    for i in 1..=GRID {
        let t = PI * i as f64 / GRID as f64;
        if gap(t) >= target {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if gap(mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            chosen = hi;
            break;
        }
        prev = t;
    }
    let (ra, rb) = rotate(chosen);
    steps[a] = ra;
    steps[b] = rb;
}
