use thiserror::Error;

use crate::solver::EntropyEnclosure;

/// Errors raised by the core library.
///
/// Variants fall in two families: input validation (bad permutations,
/// surfaces outside the supported class, out-of-range parameters) and
/// numerical failures (brackets that cannot be found, iteration caps).
/// [`Error::is_numerical`] distinguishes them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed cycle notation at column {column}: {message}")]
    Malformed { column: usize, message: String },

    #[error("element {element} appears more than once (column {column})")]
    RepeatedElement { element: usize, column: usize },

    #[error("element {element} is out of range 1..={degree} (column {column})")]
    ElementOutOfRange {
        element: usize,
        degree: usize,
        column: usize,
    },

    #[error("surface file line {line}: {message}")]
    SurfaceFile { line: usize, message: String },

    #[error("permutations have different degrees ({h} and {v})")]
    DegreeMismatch { h: usize, v: usize },

    #[error("degree must be positive")]
    EmptyPermutation,

    #[error("surface is disconnected: <h,v> has {orbits} orbits on the squares")]
    Disconnected { orbits: usize },

    #[error("vertex classes have mixed cone multipliers {multipliers:?}")]
    MixedConeAngles { multipliers: Vec<usize> },

    #[error("surface has no singularities (every vertex has cone angle 2π)")]
    NoSingularities,

    #[error("unknown surface family {0:?} (expected O, St, G, EW or L)")]
    UnknownFamily(String),

    #[error("family {family} requires k >= {min}, got {k}")]
    FamilyParameter {
        family: &'static str,
        k: usize,
        min: usize,
    },

    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("start corner does not bound the sector of direction ({a},{b})")]
    CornerMismatch { a: i64, b: i64 },

    #[error("degenerate direction (0,0)")]
    DegenerateDirection,

    #[error("bucket width {0} is coarser than 0.05")]
    BucketTooCoarse(f64),

    #[error("series diverges: k*f = {kf} >= 1 (t is below the entropy)")]
    SeriesDiverges { kf: f64 },

    #[error("target must be positive, got {0}")]
    NonPositiveTarget(f64),

    #[error("no bracket found within {steps} doublings/halvings from seed {seed}")]
    BracketNotFound { seed: f64, steps: usize },

    #[error("evaluation cap of {cap} reached")]
    IterationCap { cap: usize },

    #[error("width goal {goal} not met; best width {}", .best.width())]
    WidthGoalNotMet {
        goal: f64,
        best: Box<EntropyEnclosure>,
    },

    #[error("extended precision arithmetic: {0}")]
    Extended(String),
}

impl Error {
    /// True for failures of a numerical procedure on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SeriesDiverges { .. }
                | Error::BracketNotFound { .. }
                | Error::IterationCap { .. }
                | Error::WidthGoalNotMet { .. }
                | Error::Extended(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
