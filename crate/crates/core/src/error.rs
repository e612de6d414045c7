use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// The CLI maps these onto exit codes, so the split matters: configuration
/// problems (bad files, inconsistent dimensions, boxes that cannot hold the
/// reachable tube) are distinct from numeric blow-ups, which are distinct
/// from refusals to run an experiment whose preconditions do not hold.
#[derive(Debug, Error)]
pub enum Error {
    /// An action was passed by value and is not a member of the declared set.
    #[error("action {action:?} is not in control set `{set}`")]
    InvalidAction { set: String, action: Vec<f64> },

    /// An action index outside the declared set.
    #[error("action index {index} out of range for control set `{set}` ({len} points)")]
    ActionIndex { set: String, index: usize, len: usize },

    /// A state, value, or derived quantity stopped being finite.
    /// `t` is the earliest time at which the problem was observed.
    #[error("non-finite value at t = {t}: {what}")]
    Numeric { t: f64, what: String },

    /// Bad build inputs: malformed files, dimension mismatches, negative
    /// declared constants, controls that do not cover the horizon, …
    #[error("configuration error: {0}")]
    Config(String),

    /// A plain argument error on a math routine (negative distance, empty
    /// partition, …).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A level set with no sub-level nodes at some slice; aiming is impossible.
    #[error("level set {{phi <= {level}}} is empty at t = {t}")]
    EmptyLevelSet { t: f64, level: f64 },

    /// Dynamic-programming transitions left the grid box. The box must cover
    /// the reachable tube; results computed with clamping are not trusted.
    #[error(
        "{count} dynamic-programming transitions left the grid box; \
         enlarge the box to cover the reachable tube"
    )]
    OutOfBox { count: u64 },

    /// A query outside the grid box.
    #[error("point {point:?} lies outside the grid box")]
    OutsideGrid { point: Vec<f64> },

    /// An experiment refused to run because its standing assumption fails
    /// (e.g. the max-min/min-max gap is too large for a comparison theorem).
    #[error("precondition refused: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
