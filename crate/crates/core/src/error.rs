use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid subsystem index {index} for a state with {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("impossible outcome (probability {probability:e})")]
    ImpossibleOutcome { probability: f64 },

    #[error("pair basis is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("outcome {outcome} has no local-equivalence correction (residual {residual:e})")]
    NoLocalEquivalent { outcome: usize, residual: f64 },

    #[error("invalid pair basis: {0}")]
    InvalidBasis(String),

    #[error("pair basis is not mutually unbiased with the computational basis")]
    Biased,

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("insurance probability of 1 leaves the derived quantities undefined")]
    CertainInsurance,

    #[error("chain length {0} is not a power of two")]
    NotPowerOfTwo(u64),

    #[error("L0 = {l0} does not satisfy the growth condition L0 > {threshold}")]
    InfeasibleGrowth { l0: u64, threshold: f64 },

    #[error("vertex {0} is not in the graph")]
    MissingVertex(usize),

    #[error("invalid graph operation: {0}")]
    InvalidGraph(String),

    #[error("graph has {0} vertices, too many for a state-vector expansion")]
    TooManyVertices(usize),

    #[error("chain exhausted after {rounds} bonding rounds")]
    Depleted { rounds: usize },

    #[error("{0} photons exceed the two-photon limit")]
    TooManyPhotons(usize),

    #[error("invalid port assignment: {0}")]
    InvalidPorts(String),

    #[error("impossible detection pattern {0:?}")]
    ImpossiblePattern(Vec<u8>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("at least one trial is required")]
    NoTrials,
}

pub type Result<T> = std::result::Result<T, Error>;
