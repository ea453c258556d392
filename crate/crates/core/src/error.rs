use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input lies outside the mathematical domain (for example a gamma pole).
    #[error("domain error: {0}")]
    Domain(String),
    /// The evaluation scheme cannot certify the requested accuracy.
    #[error("precision error: {0}")]
    Precision(String),
    /// Malformed or inconsistent arguments.
    #[error("argument error: {0}")]
    Argument(String),
    /// A least-squares system is rank deficient on the sampled grid.
    #[error("conditioning error: {0}")]
    Conditioning(String),
    /// A request outside the supported operator or ODE class.
    #[error("capability error: {0}")]
    Capability(String),
    /// A reduction fit is inconsistent with a polynomial right-hand side.
    #[error("structural error: {0}")]
    Structural(String),
    /// A corpus or scenario file violates its schema.
    #[error("load error in {case}: {msg}")]
    Load { case: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
