use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An enumeration or expansion would exceed its configured size cap.
    #[error("size cap exceeded: {what} needs more than {cap} entries")]
    CapExceeded { what: &'static str, cap: usize },

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A 3-increment fed to the sewing map is not closed to tolerance.
    #[error("input is not closed: sampled |delta h| = {residual:.3e} exceeds tol = {tol:.3e}")]
    NotClosed { residual: f64, tol: f64 },

    /// A rough-path level required by an operation is absent.
    #[error("missing level {level} on rough path")]
    MissingLevel { level: u8 },

    /// The q_gamma recursion hit a denominator 2^(gamma |tau|) - 2 near zero.
    #[error("singular exponent: gamma * |tau| = {exponent} too close to 1")]
    SingularExponent { exponent: f64 },

    /// Invalid argument or configuration value.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Text that should encode a tree, forest, or config did not parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A numerical routine produced a non-finite value.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
