use thiserror::Error;

/// Errors raised by the update rules, the solver and the second-order machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("outcome space must be non-empty")]
    EmptySpace,
    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown outcome label `{0}`")]
    UnknownLabel(String),
    #[error("operands live on different outcome spaces")]
    SpaceMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("conditioning event has probability zero")]
    ZeroConditioningEvent,
    #[error("cell {cell} has positive weight but zero prior mass")]
    InfeasibleWeight { cell: usize },
    #[error("cells do not partition the space: {0}")]
    BadPartition(String),
    #[error("first argument is not absolutely continuous with respect to the second")]
    NotAbsolutelyContinuous,
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("no distribution on the prior's support satisfies the constraints")]
    Infeasible,
    #[error("solver stopped after {iterations} iterations with residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("conditional probability of R1 given R is undefined when a + b = 0")]
    UndefinedConditional,
    #[error("invalid belief point: {0}")]
    InvalidBelief(String),
    #[error("invalid message band: {0}")]
    InvalidBand(String),
    #[error("invalid second-order prior: {0}")]
    InvalidPrior(String),
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("no samples fell inside the conditioning band ({n_total} drawn)")]
    NoAcceptedSamples { n_total: u64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
