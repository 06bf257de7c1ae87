//! Experiment configuration, the reference parameter set, and the flat
//! key-value configuration file format.
//!
//! A configuration file holds one `key = value` line per field. Blank lines
//! and lines starting with `#` are ignored. Positions are written as two
//! numbers (`100 100`), lists of positions as comma-separated pairs
//! (`0 0, 5 0, 0 5`) and the area as `min_x min_y max_x max_y`. Keys that are
//! absent take their value from [`default_paper_config`] for the configured
//! robot count.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlassError};
use crate::geometry::{Area, Position, Vec2};

/// Parameters of the range measurement model: a measurement at true range `r`
/// is Gaussian with mean `alpha0 + alpha * r` and variance `r * sigma_z_sq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    pub alpha0: f64,
    pub alpha: f64,
    pub sigma_z_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Per-axis variance of the control error (m^2).
    pub sigma_c_sq: f64,
    /// Per-axis variance of the source-particle jitter (m^2).
    pub sigma_s_sq: f64,
    /// Norm of every active control command (m).
    pub step_len: f64,
}

/// Knobs of the projected gradient ascent used by the information-seeking
/// planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Length of one ascent step in control space (m).
    pub ascent_step: f64,
    pub max_iters: usize,
    /// Stop once an accepted step improves the objective by less than this (nats).
    pub tol: f64,
    /// Maximum number of source components per mixture; `None` disables the cap.
    pub mixture_cap: Option<usize>,
    /// Maximum number of robot hypotheses in the objective; `None` uses all.
    pub planning_particles: Option<usize>,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            ascent_step: 0.2,
            max_iters: 30,
            tol: 1e-6,
            mixture_cap: Some(32),
            planning_particles: Some(8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub num_robots: usize,
    pub source_true: Position,
    pub robot_starts: Vec<Position>,
    pub area: Area,
    pub env: EnvParams,
    pub motion: MotionParams,
    pub planner: PlannerParams,
    pub robot_particles: usize,
    pub source_particles: usize,
    pub d_min: f64,
    pub arrive_radius: f64,
    pub max_cycles: usize,
    pub ess_threshold: f64,
    pub seed: u64,
    pub num_trials: usize,
}

/// Starting positions of the three robots in the reference scenario.
pub const PAPER_STARTS: [Position; 3] = [Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0), Vec2::new(0.0, 5.0)];

/// The reference scenario for `num_robots` robots (1 to 3): source at
/// (100, 100) in a 150 m square, unit steps, 4 m separation, 5 m arrival
/// radius and a 500-cycle cap.
///
/// # Panics
///
/// Panics if `num_robots` is not 1, 2 or 3.
pub fn default_paper_config(num_robots: usize) -> ExperimentConfig {
    let particles = match num_robots {
        1 => 30,
        2 => 100,
        3 => 300,
        _ => panic!("reference configuration exists for 1 to 3 robots, got {num_robots}"),
    };
    ExperimentConfig {
        num_robots,
        source_true: Vec2::new(100.0, 100.0),
        robot_starts: PAPER_STARTS[..num_robots].to_vec(),
        area: Area::new(Vec2::new(0.0, 0.0), Vec2::new(150.0, 150.0)),
        env: EnvParams {
            alpha0: 0.0,
            alpha: 1.0,
            sigma_z_sq: 0.1,
        },
        motion: MotionParams {
            // E{|n|^2} = 2 * 0.025 = 0.05
            sigma_c_sq: 0.025,
            sigma_s_sq: 0.1,
            step_len: 1.0,
        },
        planner: PlannerParams::default(),
        robot_particles: particles,
        source_particles: particles,
        d_min: 4.0,
        arrive_radius: 5.0,
        max_cycles: 500,
        ess_threshold: 0.5,
        seed: 42,
        num_trials: 50,
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SlassError::InvalidConfig(msg));
        if self.num_robots == 0 {
            return bad("num_robots must be at least 1".into());
        }
        if self.robot_starts.len() != self.num_robots {
            return bad(format!(
                "robot_starts has {} entries but num_robots = {}",
                self.robot_starts.len(),
                self.num_robots
            ));
        }
        if !self.source_true.is_finite() || self.robot_starts.iter().any(|p| !p.is_finite()) {
            return bad("positions must be finite".into());
        }
        if !(self.area.min.x < self.area.max.x && self.area.min.y < self.area.max.y) {
            return bad("area must have positive extent".into());
        }
        if !self.area.contains(self.source_true) {
            return bad("source_true lies outside the area".into());
        }
        for a in 0..self.num_robots {
            for b in (a + 1)..self.num_robots {
                let d = self.robot_starts[a].distance(self.robot_starts[b]);
                if d < self.d_min {
                    return bad(format!("robots {a} and {b} start {d} m apart, below d_min = {}", self.d_min));
                }
            }
        }
        if !(self.env.sigma_z_sq > 0.0 && self.env.alpha > 0.0 && self.env.alpha0.is_finite()) {
            return bad("env requires sigma_z_sq > 0 and alpha > 0".into());
        }
        let m = &self.motion;
        if !(m.sigma_c_sq >= 0.0 && m.sigma_s_sq >= 0.0 && m.step_len > 0.0) {
            return bad("motion requires sigma_c_sq >= 0, sigma_s_sq >= 0, step_len > 0".into());
        }
        if self.robot_particles == 0 || self.source_particles == 0 {
            return bad("particle counts must be at least 1".into());
        }
        if !(self.ess_threshold > 0.0 && self.ess_threshold <= 1.0) {
            return bad("ess_threshold must lie in (0, 1]".into());
        }
        if !(self.d_min >= 0.0) || self.arrive_radius.is_nan() || self.arrive_radius < 0.0 {
            return bad("d_min and arrive_radius must be non-negative".into());
        }
        let p = &self.planner;
        if !(p.ascent_step > 0.0 && p.tol >= 0.0) || p.mixture_cap == Some(0) || p.planning_particles == Some(0) {
            return bad("planner requires ascent_step > 0, tol >= 0 and non-zero caps".into());
        }
        Ok(())
    }

    /// Parses a configuration document.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = tokenize(text)?;
        let num_robots = match entries.iter().find(|e| e.key == "num_robots") {
            Some(e) => parse_usize(e)?,
            None => match entries.iter().find(|e| e.key == "robot_starts") {
                Some(e) => parse_positions(e)?.len(),
                None => 2,
            },
        };
        if !(1..=3).contains(&num_robots) && !entries.iter().any(|e| e.key == "robot_starts") {
            return Err(SlassError::InvalidConfig(format!(
                "num_robots = {num_robots} needs explicit robot_starts"
            )));
        }
        let mut cfg = default_paper_config(num_robots.clamp(1, 3));
        cfg.num_robots = num_robots;
        for e in &entries {
            apply(&mut cfg, e)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SlassError::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders the configuration in the key-value file format; `parse` of the
    /// output yields an equal configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let pos = |p: Position| format!("{} {}", p.x, p.y);
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |v| v.to_string());
        let starts: Vec<String> = self.robot_starts.iter().map(|&p| pos(p)).collect();
        let _ = writeln!(s, "num_robots = {}", self.num_robots);
        let _ = writeln!(s, "source_true = {}", pos(self.source_true));
        let _ = writeln!(s, "robot_starts = {}", starts.join(", "));
        let _ = writeln!(
            s,
            "area = {} {} {} {}",
            self.area.min.x, self.area.min.y, self.area.max.x, self.area.max.y
        );
        let _ = writeln!(s, "alpha0 = {}", self.env.alpha0);
        let _ = writeln!(s, "alpha = {}", self.env.alpha);
        let _ = writeln!(s, "sigma_z_sq = {}", self.env.sigma_z_sq);
        let _ = writeln!(s, "sigma_c_sq = {}", self.motion.sigma_c_sq);
        let _ = writeln!(s, "sigma_s_sq = {}", self.motion.sigma_s_sq);
        let _ = writeln!(s, "step_len = {}", self.motion.step_len);
        let _ = writeln!(s, "robot_particles = {}", self.robot_particles);
        let _ = writeln!(s, "source_particles = {}", self.source_particles);
        let _ = writeln!(s, "d_min = {}", self.d_min);
        let _ = writeln!(s, "arrive_radius = {}", self.arrive_radius);
        let _ = writeln!(s, "max_cycles = {}", self.max_cycles);
        let _ = writeln!(s, "ess_threshold = {}", self.ess_threshold);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "num_trials = {}", self.num_trials);
        let _ = writeln!(s, "ascent_step = {}", self.planner.ascent_step);
        let _ = writeln!(s, "ascent_max_iters = {}", self.planner.max_iters);
        let _ = writeln!(s, "ascent_tol = {}", self.planner.tol);
        let _ = writeln!(s, "mixture_cap = {}", opt(self.planner.mixture_cap));
        let _ = writeln!(s, "planning_particles = {}", opt(self.planner.planning_particles));
        s
    }
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn tokenize(text: &str) -> Result<Vec<Entry<'_>>> {
    let mut out: Vec<Entry<'_>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| SlassError::Config {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if out.iter().any(|e| e.key == key) {
            return Err(SlassError::Config {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        out.push(Entry {
            line,
            key,
            value: value.trim(),
        });
    }
    Ok(out)
}

fn err(e: &Entry<'_>, message: impl Into<String>) -> SlassError {
    SlassError::Config {
        line: e.line,
        message: format!("`{}`: {}", e.key, message.into()),
    }
}

fn parse_f64(e: &Entry<'_>) -> Result<f64> {
    match e.value {
        "inf" | "infinity" => Ok(f64::INFINITY),
        v => v.parse().map_err(|_| err(e, format!("not a number: `{v}`"))),
    }
}

fn parse_usize(e: &Entry<'_>) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| err(e, format!("not a non-negative integer: `{}`", e.value)))
}

fn parse_opt_usize(e: &Entry<'_>) -> Result<Option<usize>> {
    match e.value {
        "none" | "off" => Ok(None),
        _ => parse_usize(e).map(Some),
    }
}

fn parse_numbers(e: &Entry<'_>) -> Result<Vec<f64>> {
    e.value
        .split(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | '(' | ')'))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| err(e, format!("not a number: `{t}`"))))
        .collect()
}

fn parse_positions(e: &Entry<'_>) -> Result<Vec<Position>> {
    let nums = parse_numbers(e)?;
    if nums.is_empty() || nums.len() % 2 != 0 {
        return Err(err(e, "expected a list of x y pairs"));
    }
    Ok(nums.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect())
}

fn parse_position(e: &Entry<'_>) -> Result<Position> {
    match parse_positions(e)?.as_slice() {
        [p] => Ok(*p),
        _ => Err(err(e, "expected exactly one x y pair")),
    }
}

fn apply(cfg: &mut ExperimentConfig, e: &Entry<'_>) -> Result<()> {
    match e.key {
        "num_robots" => {}
        "source_true" => cfg.source_true = parse_position(e)?,
        "robot_starts" => cfg.robot_starts = parse_positions(e)?,
        "area" => match parse_numbers(e)?.as_slice() {
            &[x0, y0, x1, y1] => cfg.area = Area::new(Vec2::new(x0, y0), Vec2::new(x1, y1)),
            _ => return Err(err(e, "expected `min_x min_y max_x max_y`")),
        },
        "alpha0" => cfg.env.alpha0 = parse_f64(e)?,
        "alpha" => cfg.env.alpha = parse_f64(e)?,
        "sigma_z_sq" => cfg.env.sigma_z_sq = parse_f64(e)?,
        "sigma_c_sq" => cfg.motion.sigma_c_sq = parse_f64(e)?,
        "sigma_s_sq" => cfg.motion.sigma_s_sq = parse_f64(e)?,
        "step_len" => cfg.motion.step_len = parse_f64(e)?,
        "robot_particles" | "m_r" => cfg.robot_particles = parse_usize(e)?,
        "source_particles" | "m_s" => cfg.source_particles = parse_usize(e)?,
        "d_min" => cfg.d_min = parse_f64(e)?,
        "arrive_radius" => cfg.arrive_radius = parse_f64(e)?,
        "max_cycles" => cfg.max_cycles = parse_usize(e)?,
        "ess_threshold" => cfg.ess_threshold = parse_f64(e)?,
        "seed" => cfg.seed = e.value.parse().map_err(|_| err(e, "not a 64-bit unsigned integer"))?,
        "num_trials" => cfg.num_trials = parse_usize(e)?,
        "ascent_step" => cfg.planner.ascent_step = parse_f64(e)?,
        "ascent_max_iters" => cfg.planner.max_iters = parse_usize(e)?,
        "ascent_tol" => cfg.planner.tol = parse_f64(e)?,
        "mixture_cap" => cfg.planner.mixture_cap = parse_opt_usize(e)?,
        "planning_particles" => cfg.planner.planning_particles = parse_opt_usize(e)?,
        other => return Err(err(e, format!("unknown key `{other}`"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_particle_counts() {
        assert_eq!(default_paper_config(1).robot_particles, 30);
        let k2 = default_paper_config(2);
        assert_eq!((k2.robot_particles, k2.source_particles), (100, 100));
        assert_eq!(default_paper_config(3).source_particles, 300);
    }

    #[test]
    fn reference_starts_and_noise() {
        assert_eq!(default_paper_config(1).robot_starts, vec![Vec2::new(0.0, 0.0)]);
        for k in 1..=3 {
            let cfg = default_paper_config(k);
            assert!((2.0 * cfg.motion.sigma_c_sq - 0.05).abs() < 1e-15);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = ExperimentConfig::parse("num_robots = 3\nseed = 7\n# comment\n\nd_min = 4.5").unwrap();
        assert_eq!(cfg.robot_particles, 300);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.d_min, 4.5);
        assert_eq!(cfg.robot_starts.len(), 3);
    }

    #[test]
    fn list_forms_are_equivalent() {
        let a = ExperimentConfig::parse("robot_starts = 0 0, 5 0").unwrap();
        let b = ExperimentConfig::parse("robot_starts = (0,0),(5,0)").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_robots, 2);
    }

    #[test]
    fn config_string_round_trips() {
        let mut cfg = default_paper_config(3);
        cfg.arrive_radius = f64::INFINITY;
        cfg.planner.mixture_cap = None;
        let back = ExperimentConfig::parse(&cfg.to_config_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ExperimentConfig::parse("bogus = 1"),
            Err(SlassError::Config { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seed = 1\nseed = 2"),
            Err(SlassError::Config { line: 2, .. })
        ));
        assert!(ExperimentConfig::parse("source_true = 200 200").is_err());
        assert!(ExperimentConfig::parse("robot_starts = 0 0, 1 0").is_err());
        assert!(ExperimentConfig::parse("sigma_z_sq = 0").is_err());
    }
}
