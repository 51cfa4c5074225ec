use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("bin edges must be finite and strictly increasing, at least two of them")]
    InvalidEdges,
    #[error("cannot merge accumulators with different bin edges")]
    EdgeMismatch,
    #[error("need at least {needed} populated bins, have {have}")]
    TooFewBins { needed: usize, have: usize },
    #[error("need at least {needed} usable points, have {have}")]
    TooFewPoints { needed: usize, have: usize },
    #[error("need at least {needed} events, have {have}")]
    TooFewEvents { needed: usize, have: usize },
    #[error("need at least {needed} trajectories, have {have}")]
    TooFewTrajectories { needed: usize, have: usize },
    #[error("fit did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Core(#[from] fermitraj::Error),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;
