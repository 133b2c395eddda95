use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid waypoints: {0}")]
    InvalidWaypoints(String),

    #[error("invalid segmentation: {segments} segments for {samples} samples")]
    InvalidSegmentation { segments: usize, samples: usize },

    #[error("degenerate context: {0}")]
    DegenerateContext(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("trajectories are not comparable: {0}")]
    Incomparable(String),

    #[error("no current plan for this session; plan before submitting feedback")]
    NoCurrentPlan,

    #[error("waypoint {0:?} lies outside the workspace bounds")]
    OutOfBounds([f64; 3]),

    #[error("infeasible timing: {0}")]
    InfeasibleTiming(String),

    #[error("integration diverged at t = {time}: position {position:?}, velocity {velocity:?}")]
    Diverged {
        time: f64,
        position: [f64; 3],
        velocity: [f64; 3],
    },

    #[error("invalid document:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
