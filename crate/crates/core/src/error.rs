use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("differential shapes do not chain: {0}")]
    ShapeMismatch(String),
    #[error("complex fails d^2 = 0 (max residual {residual:e} at degree {degree})")]
    NotValidated { degree: usize, residual: f64 },
    #[error("invalid model: {0}")]
    BadModel(String),
    #[error("truncation must be at least 1, got {0}")]
    UnsupportedTruncation(u32),
    #[error("lambda = 1 admits no periodic primitive in general")]
    LambdaOne,
    #[error("lambda must be a finite real > 1, got {0}")]
    BadLambda(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("twisting form is not closed (residual {0:e})")]
    NotClosed(f64),
    #[error("wedge product leaves the truncated span: {}", .0.join(", "))]
    TruncationOverflow(Vec<String>),
    #[error("exponential of gauge function not representable (residual {0:e})")]
    ExpOverflow(f64),
    #[error("metric is not positive definite (min eigenvalue {0:e})")]
    SingularMetric(f64),
    #[error("function varies along leaves (variation {0:e})")]
    NotBasic(f64),
    #[error("vector field vanishes (norm {0:e})")]
    ZeroVector(f64),
    #[error("degree {0} out of range")]
    DegreeOutOfRange(usize),
    #[error("quadrature unstable: relative change {0:e} after refinement cap")]
    QuadratureUnstable(f64),
    #[error("invalid cover: {0}")]
    BadCover(String),
    #[error("fixture missing: {0}")]
    FixtureMissing(String),
    #[error("malformed fixture, line {line}: {reason}")]
    BadFixture { line: usize, reason: String },
    #[error("invalid truncation sweep: {0}")]
    InvalidSweep(String),
    #[error("form layout is not closed under d: {0}")]
    Layout(String),
}
