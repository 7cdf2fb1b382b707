use thiserror::Error;

/// Everything that can go wrong inside the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A sampling weight is zero, negative or not finite. `row` is 1-based.
    #[error("non-positive or non-finite weight in row {row}")]
    NonPositiveWeight { row: usize },

    #[error("at least 2 observations are required, got {n}")]
    TooFewObservations { n: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    /// A cell could not be read as a finite number. `row` is the 1-based data row.
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse { row: usize, column: String, value: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parameter outside the model domain: {0}")]
    Domain(String),

    /// Random weights summed to zero after the retry budget.
    #[error("degenerate random weight draw (sum underflowed to zero)")]
    DegenerateDraw,

    #[error("probit likelihood has no finite maximizer (separated data)")]
    Separation,

    #[error("optimizer did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("variance estimate collapsed below its floor")]
    DegenerateVariance,

    #[error("information matrix is singular (condition number {condition:.3e})")]
    SingularInformation { condition: f64 },

    #[error("{failed} of {total} replicates failed, above the ceiling of {ceiling}")]
    TooManyFailures { failed: usize, total: usize, ceiling: f64 },

    #[error("{draws} successful draws, at least {required} needed")]
    TooFewDraws { draws: usize, required: usize },
}

impl Error {
    /// True for failures of the numerical procedures themselves, as opposed to
    /// bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDraw
                | Error::Separation
                | Error::NonConvergence { .. }
                | Error::DegenerateVariance
                | Error::SingularInformation { .. }
                | Error::TooManyFailures { .. }
                | Error::TooFewDraws { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
