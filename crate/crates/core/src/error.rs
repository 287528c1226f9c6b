use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no unique best arm")]
    NoUniqueBestArm,
    #[error("a bandit instance needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown scenario `{0}` (expected s1..s8)")]
    UnknownScenario(String),
    #[error("unknown case `{0}` (expected case1..case6)")]
    UnknownCase(String),
    #[error("invalid case combination: {0}")]
    InvalidCase(String),
    #[error("y out of range: y = {y}, valid interval is (0, {upper})")]
    YOutOfRange { y: f64, upper: f64 },
    #[error("variances must be strictly positive (arm {arm} has {value})")]
    NonPositiveVariance { arm: usize, value: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(
        "bisection did not converge after {iterations} iterations: bracket [{lo}, {hi}], F(mid) = {f_mid}"
    )]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        f_mid: f64,
    },
    #[error("negative weight {value} for arm {arm}")]
    NegativeWeight { arm: usize, value: f64 },
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("zero propensity")]
    ZeroPropensity,
    #[error("arm {0} has no pulls")]
    ZeroPulls(usize),
    #[error("accumulator holds {held} rounds but {requested} were requested")]
    RoundMismatch { held: usize, requested: usize },
    #[error("brute-force search supports at most 4 arms, got {0}")]
    GridTooLarge(usize),
    #[error("grid step must lie in (0, 0.1], got {0}")]
    InvalidGridStep(f64),
    #[error("budget {budget} too small: need at least {required}")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("strategy `{strategy}` requires {expected} arms, got {got}")]
    WrongArmCount {
        strategy: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid strategy parameters: {0}")]
    InvalidParams(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("trace not retained; enable diagnostics")]
    MissingTrace,
    #[error("probability out of range: {0}")]
    InvalidProbability(f64),
    #[error("tail bracket needs u >= 0, got {0}")]
    NegativeTailArgument(f64),
    #[error("arm index {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("diagnostics need an rs-* strategy, got `{0}`")]
    NotDiagnosable(String),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
