use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate chord: the two points coincide")]
    DegenerateChord,

    #[error("no ball of radius {radius} contains both points (chord length {chord})")]
    NoContainingBall { radius: f64, chord: f64 },

    #[error(
        "intersection of disks of radius {radius} is empty \
         (minimal enclosing ball of the centers has radius {meb_radius})"
    )]
    EmptyIntersection { radius: f64, meb_radius: f64 },

    #[error(
        "no ball of radius {radius} contains the point set \
         (minimal enclosing ball has radius {meb_radius})"
    )]
    HullInfeasible { radius: f64, meb_radius: f64 },

    #[error("empty body")]
    EmptyBody,

    #[error("body is unbounded or has an invalid bounding box")]
    Unbounded,

    #[error("point is not on the body boundary")]
    NotOnBoundary,

    #[error("point is not in the body")]
    NotInBody,

    #[error("direction is not normal to the body at the given point")]
    NotNormal,

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("grid budget exceeded: {cells} cells requested, budget {budget}")]
    GridBudget { cells: usize, budget: usize },

    #[error("cannot serialize this body kind")]
    Unserializable,

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
