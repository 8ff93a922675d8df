use thiserror::Error;

/// Failure while evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt/pow of negative base {base} with non-integer exponent {exponent}")]
    NegativeBase { base: f64, exponent: f64 },
    #[error("log of non-positive argument {0}")]
    LogDomain(f64),
    #[error("pow of zero base with exponent {0} is not differentiable")]
    SingularPower(f64),
    #[error("non-finite value produced")]
    NonFinite,
    #[error("exponent must be a constant expression")]
    NonConstantExponent,
}

/// Errors raised while reading the metric-spec text format.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("unknown symbol `{symbol}` at {line}:{column}")]
    UnknownSymbol {
        symbol: String,
        line: usize,
        column: usize,
    },
    #[error("dimension mismatch at {line}:{column}: `{symbol}` exceeds dim {dim}")]
    DimensionMismatch {
        symbol: String,
        dim: usize,
        line: usize,
        column: usize,
    },
    #[error("invalid metric: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("requested derivative order (x: {max_x}, total: {max_total}) exceeds the supported bound (x: 2, total: 4)")]
    OrderOverflow { max_x: usize, max_total: usize },
}

/// Errors from the geometry pipeline (sampling, frames, classification).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("degenerate metric: |det g| = {det:e} below floor {floor:e}")]
    DegenerateMetric { det: f64, floor: f64 },
    #[error("metric is not positive on the slit tangent bundle (L = {0})")]
    NonPositiveLength(f64),
    #[error("sampling exhausted the domain: {accepted} accepted out of {drawn} draws")]
    DomainExhausted { accepted: usize, drawn: usize },
    #[error("dimension {n} too small for {what} (needs n >= {min})")]
    DimensionTooSmall {
        what: &'static str,
        n: usize,
        min: usize,
    },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("homogeneity check failed: max relative error {max_rel_err:e}")]
    NotHomogeneous { max_rel_err: f64 },
    #[error("point dimension {got} does not match metric dimension {expected}")]
    PointDimension { expected: usize, got: usize },
}
