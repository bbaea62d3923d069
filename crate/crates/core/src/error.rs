use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("points live in different tree spaces")]
    SpaceMismatch,
    #[error("invalid orthant: {0}")]
    InvalidOrthant(String),
    #[error("invalid coordinates: {0}")]
    InvalidCoords(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("empty input")]
    Empty,
    #[error("too few points: {0}")]
    TooFewPoints(String),
    #[error("all points lie in a single orthant")]
    SingleOrthant,
    #[error("existence condition violated: {0}")]
    ExistenceViolation(String),
    #[error("objective unbounded: |y| exceeded {0}")]
    Unbounded(f64),
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("mixture component {0} collapsed")]
    ComponentCollapse(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
