//! Browser bindings for the source-seeking simulator.
//!
//! Three operations are exported: stepping a trial and reading back its state,
//! sweeping one robot's heading through the planner objective, and mapping
//! the range likelihood of a single measurement over the area.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use slass::infocontrol::{toward, MiObjective};
use slass::measurement::range_log_likelihood;
use slass::sim::{CycleRecord, PolicyBelief, Trial};
use slass::{default_paper_config, PolicyKind, Position, SlassError, Vec2};

/// Upper bound on the source particles sent to the page per snapshot.
const MAX_CLOUD: usize = 2000;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[derive(Serialize)]
struct Snapshot<'a> {
    cycle: usize,
    done: bool,
    status: &'a str,
    area: [f64; 4],
    true_source: Position,
    true_robots: &'a [Position],
    arrived: &'a [bool],
    robot_estimates: Vec<Position>,
    source_estimate: Position,
    objective: Option<f64>,
    source_error: f64,
    /// `[x, y, weight]`, weights normalized over the cloud sent.
    source_cloud: Vec<[f64; 3]>,
    /// Per robot, the positions of its hypotheses.
    robot_clouds: Vec<Vec<[f64; 2]>>,
}

/// A single trial stepped one control cycle at a time.
#[wasm_bindgen]
pub struct Simulation {
    trial: Trial,
    last: Option<CycleRecord>,
    status: String,
}

#[wasm_bindgen]
impl Simulation {
    /// Builds a trial with the default configuration for `robots` robots and
    /// the source at (`source_x`, `source_y`).
    #[wasm_bindgen(constructor)]
    pub fn new(robots: usize, policy: &str, seed: u32, source_x: f64, source_y: f64) -> Result<Simulation, JsError> {
        Self::build(robots, policy, seed, source_x, source_y).map_err(js)
    }

    pub fn done(&self) -> bool {
        self.status != "running"
    }

    /// Runs one cycle unless the trial has ended and returns the snapshot.
    pub fn step(&mut self) -> Result<String, JsError> {
        self.advance();
        self.snapshot()
    }

    /// Current state as JSON.
    pub fn snapshot(&self) -> Result<String, JsError> {
        serde_json::to_string(&self.state()).map_err(|e| js(e.to_string()))
    }

    /// Planner objective as robot `robot` turns through `samples` headings
    /// while the other active robots head for the source estimate. Entry `i`
    /// is the value at heading `2*pi*i/samples` from the x axis.
    pub fn heading_profile(&self, robot: usize, samples: usize) -> Result<Vec<f64>, JsError> {
        self.profile(robot, samples).map_err(js)
    }
}

impl Simulation {
    fn build(robots: usize, policy: &str, seed: u32, source_x: f64, source_y: f64) -> Result<Simulation, String> {
        if !(1..=3).contains(&robots) {
            return Err("robots must be 1, 2 or 3".into());
        }
        let policy: PolicyKind = policy.parse().map_err(|e: SlassError| e.to_string())?;
        let mut cfg = default_paper_config(robots);
        cfg.seed = u64::from(seed);
        cfg.source_true = Vec2::new(source_x, source_y);
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(Simulation {
            trial: Trial::new(&cfg, policy, 0),
            last: None,
            status: "running".into(),
        })
    }

    fn advance(&mut self) {
        if !self.done() {
            match self.trial.step() {
                Ok(record) => {
                    self.last = Some(record);
                    if self.trial.world.all_arrived() {
                        self.status = "all_arrived".into();
                    } else if self.trial.world.cycle >= self.trial.cfg.max_cycles {
                        self.status = "max_cycles".into();
                    }
                }
                Err(e) => self.status = format!("aborted: {e}"),
            }
        }
    }

    fn state(&self) -> Snapshot<'_> {
        let world = &self.trial.world;
        let area = self.trial.cfg.area;
        let (robot_estimates, source_estimate, source_cloud, robot_clouds) = match &self.trial.belief {
            PolicyBelief::Joint(b) => {
                let outer = b.outer_weights();
                let cloud = b.particles.iter().zip(&outer).flat_map(|(p, &w)| {
                    p.sources.iter().map(move |s| [s.pos.x, s.pos.y, w * s.weight])
                });
                let robots = (0..b.num_robots())
                    .map(|k| b.particles.iter().map(|p| [p.robots[k].x, p.robots[k].y]).collect())
                    .collect();
                (b.robot_estimate(), b.source_estimate(), thin(cloud.collect()), robots)
            }
            PolicyBelief::TwoStage(b) => {
                let cloud = b.sources.iter().map(|s| [s.pos.x, s.pos.y, s.weight]).collect();
                let k = b.robots.first().map_or(0, |h| h.robots.len());
                let robots = (0..k)
                    .map(|k| b.robots.iter().map(|h| [h.robots[k].x, h.robots[k].y]).collect())
                    .collect();
                (b.robot_estimate(), b.source_estimate(), thin(cloud), robots)
            }
        };
        Snapshot {
            cycle: world.cycle,
            done: self.done(),
            status: &self.status,
            area: [area.min.x, area.min.y, area.max.x, area.max.y],
            true_source: world.true_source,
            true_robots: &world.true_robots,
            arrived: &world.arrived,
            source_error: source_estimate.distance(world.true_source),
            robot_estimates,
            source_estimate,
            objective: self.last.as_ref().and_then(|r| r.objective),
            source_cloud,
            robot_clouds,
        }
    }

    fn profile(&self, robot: usize, samples: usize) -> Result<Vec<f64>, String> {
        let cfg = &self.trial.cfg;
        let active = self.trial.world.active();
        if robot >= active.len() {
            return Err(format!("no robot {robot}"));
        }
        if !active[robot] {
            return Err(format!("robot {robot} has arrived"));
        }
        if samples == 0 {
            return Err("samples must be positive".into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (objective, robots, source) = match &self.trial.belief {
            PolicyBelief::Joint(b) => (
                MiObjective::from_belief_capped(b, &cfg.env, &active, &cfg.planner, &mut rng),
                b.robot_estimate(),
                b.source_estimate(),
            ),
            PolicyBelief::TwoStage(b) => (b.objective(cfg, &active, &mut rng), b.robot_estimate(), b.source_estimate()),
        };
        let mut control = toward(source, &robots, &active, cfg.motion.step_len);
        Ok((0..samples)
            .map(|i| {
                let theta = std::f64::consts::TAU * i as f64 / samples as f64;
                control.steps[robot] = Vec2::new(theta.cos(), theta.sin()) * cfg.motion.step_len;
                objective.value(&control)
            })
            .collect())
    }
}

/// Keeps every n-th point so at most [`MAX_CLOUD`] remain, then renormalizes.
fn thin(cloud: Vec<[f64; 3]>) -> Vec<[f64; 3]> {
    let stride = cloud.len().div_ceil(MAX_CLOUD).max(1);
    let mut kept: Vec<[f64; 3]> = cloud.into_iter().step_by(stride).collect();
    let total: f64 = kept.iter().map(|p| p[2]).sum();
    if total > 0.0 {
        kept.iter_mut().for_each(|p| p[2] /= total);
    }
    kept
}

/// Likelihood of a range reading `z` taken by a robot at (`robot_x`,
/// `robot_y`), as a function of the source position, on a `cells` x `cells`
/// grid over the default area. Row-major from the minimum corner, scaled so
/// the largest cell is 1.
#[wasm_bindgen]
pub fn likelihood_grid(robot_x: f64, robot_y: f64, z: f64, cells: usize) -> Result<Vec<f64>, JsError> {
    likelihood_values(robot_x, robot_y, z, cells).map_err(js)
}

fn likelihood_values(robot_x: f64, robot_y: f64, z: f64, cells: usize) -> Result<Vec<f64>, String> {
    if cells == 0 {
        return Err("cells must be positive".into());
    }
    if !(z.is_finite() && robot_x.is_finite() && robot_y.is_finite()) {
        return Err("robot position and range must be finite".into());
    }
    let cfg = default_paper_config(1);
    let (min, max) = (cfg.area.min, cfg.area.max);
    let robot = Vec2::new(robot_x, robot_y);
    let cell = Vec2::new((max.x - min.x) / cells as f64, (max.y - min.y) / cells as f64);
    let log: Vec<f64> = (0..cells * cells)
        .map(|i| {
            let centre = Vec2::new(
                min.x + ((i % cells) as f64 + 0.5) * cell.x,
                min.y + ((i / cells) as f64 + 0.5) * cell.y,
            );
            range_log_likelihood(z, centre.distance(robot), &cfg.env)
        })
        .collect();
    let peak = log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(log.into_iter().map(|l| (l - peak).exp()).collect())
}
