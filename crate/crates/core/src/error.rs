use thiserror::Error;

/// Failures raised by the Gaussian-state algebra and the trajectory drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice size {0}: must be even and at least 4")]
    InvalidLatticeSize(usize),
    #[error("lattice size {0} is odd")]
    OddSize(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("columns are not orthonormal (max defect {0:e})")]
    NotOrthonormal(f64),
    #[error("coefficient matrix lost rank (smallest pivot {0:e})")]
    RankDeficient(f64),
    #[error("occupied subspace is ambiguous: eigenvalue gap {0:e} below 1e-6")]
    AmbiguousSubspace(f64),
    #[error("correlation eigenvalue {0} lies outside [0, 1]")]
    EigenvalueOutOfRange(f64),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("site {0} belongs to the region")]
    SiteInRegion(usize),
    #[error("spectral propagation needs an anti-Hermitian generator (defect {0:e})")]
    NotAntiHermitian(f64),
    #[error("outcome {outcome} at site {site} has probability {probability:e}")]
    ImpossibleOutcome {
        site: usize,
        outcome: u8,
        probability: f64,
    },
    #[error("negative jump probability {probability:e} at site {site}")]
    NegativeProbability { site: usize, probability: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the Fock-space oracle supports at most 10 sites, got {0}")]
    OracleTooLarge(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
