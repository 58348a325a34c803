use mixspread::SpreadError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] SpreadError),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Engine(e) => match e {
                SpreadError::InvalidInput { .. } | SpreadError::Config(_) | SpreadError::MgfKindMismatch { .. } => 2,
                SpreadError::NoSolution { .. } => 3,
                SpreadError::MgfDomain { .. } | SpreadError::MomentsUnavailable { .. } => 4,
                SpreadError::SeriesDivergence { .. } | SpreadError::Quadrature { .. } => 5,
            },
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
