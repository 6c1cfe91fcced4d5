use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("transition digraph is not strongly connected: no path from {from} to {to}")]
    NotStronglyConnected { from: usize, to: usize },

    #[error("word budget of {limit} exceeded at n = {at_n} ({needed} words required)")]
    Budget { limit: u64, at_n: usize, needed: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than by the
    /// computation itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidSystem(_)
                | Error::InvalidPotential(_)
                | Error::InvalidWord(_)
                | Error::Config(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
