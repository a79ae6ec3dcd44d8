use std::fmt;

/// Which half of the two-stage pipeline produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Supply,
    Demand,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Supply => f.write_str("supply"),
            Stage::Demand => f.write_str("demand"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("design is rank deficient: column `{column}` is collinear with earlier columns")]
    Collinearity { column: String },

    #[error("insufficient data: {n} observations for {k} parameters")]
    InsufficientData { n: usize, k: usize },

    #[error("invalid inference input: {0}")]
    InvalidInference(String),

    #[error("observed response has zero variance")]
    DegenerateVariance,

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::DegenerateData(_) => "degenerate_data",
            Error::Collinearity { .. } => "collinearity",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvalidInference(_) => "invalid_inference",
            Error::DegenerateVariance => "degenerate_variance",
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Stage { source, .. } => source.kind(),
        }
    }

    /// The failing stage, if the error came out of the two-stage pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub(crate) fn in_stage(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
