//! Simultaneous localization and source seeking for a team of robots that
//! only measure ranges: to an RF source and to each other.
//!
//! The crate provides the range measurement model, a Rao-Blackwellized
//! particle filter that jointly tracks the robots and the source, an
//! information-seeking planner, two benchmark policies, a ground-truth
//! simulator and a multi-trial experiment harness.

pub mod config;
pub mod control;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod infocontrol;
pub mod measurement;
pub mod policies;
pub mod rbpf;
pub mod resampling;
pub mod rng;
pub mod sim;

pub use config::{default_paper_config, EnvParams, ExperimentConfig, MotionParams, PlannerParams};
pub use control::ControlInput;
pub use error::{Result, SlassError};
pub use geometry::{Area, Position, Vec2};
pub use policies::PolicyKind;
