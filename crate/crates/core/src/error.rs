use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fiber must have at least one block")]
    NoBlocks,
    #[error("tau has {tau} entries and theta has {theta}; both must equal the block count")]
    LengthMismatch { tau: usize, theta: usize },
    #[error("tau[{index}] = {value} is outside (0, 1]")]
    InvalidTau { index: usize, value: f64 },
    #[error("theta[{index}] = {value} is outside [0, 1]")]
    InvalidTheta { index: usize, value: f64 },
    #[error("energy {0} must be finite and non-negative")]
    InvalidEnergy(f64),
    #[error("attack position {position} is outside [1, {blocks}]")]
    AttackPosition { position: usize, blocks: usize },
    #[error("attack tau {tau} at block {position} exceeds the baseline {baseline}; an attacker never increases transmissivity")]
    AttackIncreasesTau { position: usize, tau: f64, baseline: f64 },
    #[error("attack theta {theta} at block {position} is outside [0, 1]")]
    AttackTheta { position: usize, theta: f64 },
    #[error("attack tau {tau} at block {position} is negative or not finite")]
    AttackTau { position: usize, tau: f64 },
    #[error("responses cover {left} and {right} blocks respectively")]
    BlockMismatch { left: usize, right: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dense rendering of size {n} exceeds the configured limit {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("vector lengths differ: {left} vs {right}")]
    VectorLength { left: usize, right: usize },
    #[error("input energy {energy} exceeds the budget {budget}")]
    EnergyConstraint { energy: f64, budget: f64 },
    #[error("log-probability {0} is positive or NaN")]
    InvalidLogProb(f64),
    #[error("argument {0} must be non-negative")]
    Negative(f64),
    #[error("variance {0} must be positive")]
    NonPositiveVariance(f64),
    #[error("empty attack list")]
    NoAttacks,
    #[error("unknown functional id `{0}` (expected `identity` or `log1p_scaled`)")]
    UnknownFunctional(String),
    #[error("quadrature needs at least 64 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("worker count must be positive")]
    ZeroWorkers,
    #[error("{what}: n = {n} must exceed the transient length {transient}")]
    TooShort { what: &'static str, n: usize, transient: usize },
}
