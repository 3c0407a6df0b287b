use thiserror::Error;

/// Errors produced by the array design library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("source at index {index} is invalid: {reason}")]
    Source { index: usize, reason: String },

    #[error("scenario has no desired source")]
    NoDesiredSource,

    #[error("{0} angles supplied for a {1}D geometry")]
    Dimensionality(&'static str, usize),

    #[error("invalid support: {0}")]
    Support(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("support {0:?} is not centro-symmetric")]
    NotCentroSymmetric(Vec<usize>),

    #[error("enumeration refused: {count} (about {:.1e}) candidate supports exceed the budget of {budget}", *count as f64)]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("no fully augmentable {sensors}-sensor array spans an aperture of {aperture} grid points")]
    NoAugmentablePrefix { aperture: usize, sensors: usize },

    #[error("conic solver reported an infeasible problem ({0})")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
