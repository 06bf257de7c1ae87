use std::path::PathBuf;

use thiserror::Error;

/// Filter level at which a belief degenerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefLevel {
    Robot,
    Source,
}

impl std::fmt::Display for BeliefLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BeliefLevel::Robot => f.write_str("robot"),
            BeliefLevel::Source => f.write_str("source"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SlassError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate {level} belief at cycle {cycle}{}", stage.map(|s| format!(" (stage {s})")).unwrap_or_default())]
    DegenerateBelief {
        cycle: usize,
        level: BeliefLevel,
        /// Two-stage benchmark stage (1 or 2), `None` for the joint filter.
        stage: Option<u8>,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("cycle {cycle}: executed commands break the constraints (step-length error {norm_error:e}, predicted separation {min_distance})")]
    ConstraintViolation {
        cycle: usize,
        norm_error: f64,
        min_distance: f64,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SlassError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SlassError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, SlassError>;
