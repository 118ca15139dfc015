use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero in F_{0}")]
    DivisionByZero(u32),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("unsupported prime {0} (supported: 2, 3, 5, 7, 11, 13)")]
    UnsupportedPrime(u64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("exact division failed: {0}")]
    NotDivisible(String),
    #[error("invalid precision window: {0}")]
    PrecisionWindowInvalid(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("invalid ramification break s={s} for p={p} (need s >= 1 and p not dividing s)")]
    InvalidBreak { p: u32, s: i64 },
    #[error("invalid Artin-Schreier constant: {0}")]
    InvalidF(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("element is not trace zero")]
    NotTraceZero,
    #[error("truncated oracle did not stabilize: {0:?}")]
    NotStabilized(Vec<usize>),
    #[error("budget exceeded: p={p} allows n <= {max}, requested n={n}")]
    BudgetExceeded { p: u32, n: usize, max: usize },
    #[error("cache miss: {0}")]
    CacheMiss(String),
    #[error("cache corrupt: {0}")]
    CacheCorrupt(String),
    #[error("trace equation unsolvable: target valuation {valuation} below {threshold}")]
    TraceUnsolvable { valuation: String, threshold: i64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampling inconclusive: {0}")]
    SamplingInconclusive(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
