use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported surface: n = {0} (need odd n with 5 <= n <= 99)")]
    UnsupportedSurface(usize),

    #[error("degenerate angle {0}: expected 0 < theta < pi away from poles of cot")]
    DegenerateAngle(f64),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("trajectory passes within corner tolerance of a vertex near {point} after {crossings} crossings")]
    CornerHit { point: Point, crossings: usize },

    #[error("direction {0} is not in the standard sector [0, pi/n)")]
    NotSectorNormalized(f64),

    #[error("invalid start: {0}")]
    InvalidStart(String),

    #[error("not a walk on the transition diagram: no arrow {from} -> {to}")]
    InvalidPath { from: String, to: String },

    #[error("cannot parse letter sequence at '{0}'")]
    Parse(String),

    #[error("inconsistent transition diagram: {0}")]
    InconsistentDiagram(String),

    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
