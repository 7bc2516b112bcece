use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(f64),
    #[error("rate `{name}` must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("parameter `{name}` is not finite")]
    NonFinite { name: &'static str },
    #[error("Lindblad positivity violated: m^2(nu^2 + 4 xi^2) = {lhs} > 2 d0 d2 = {rhs}")]
    PositivityViolation { lhs: f64, rhs: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("operation requires nu > 0")]
    ZeroFriction,
    #[error("operation requires d0 > 0")]
    ZeroDecoherence,
    #[error("characteristic argument {re}{im:+}i leaves the representable domain of the initial profile")]
    DomainEscape { re: f64, im: f64 },
    #[error("mode {index} (q = {q}): {source}")]
    Mode {
        index: usize,
        q: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("edge magnitude {edge:e} exceeds the leak threshold {threshold:e}")]
    BoundaryLeak { edge: f64, threshold: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid angular momentum label: {0}")]
    InvalidLabel(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("quadratic envelope fit failed: {0}")]
    FitFailure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
