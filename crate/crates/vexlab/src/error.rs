//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Syntax error while parsing an expression string. `offset` is a byte
    /// offset into the input.
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// A pointwise evaluation left the real domain (log of a non-positive
    /// number, fractional power of a negative base, ...). Carries the
    /// offending subexpression rendered back to text.
    #[error("domain error in `{subexpr}` at x = {x}: {message}")]
    Domain {
        subexpr: String,
        x: f64,
        message: String,
    },

    /// An operation was asked of an object that cannot support it, e.g. a
    /// derivative of a function tagged singular.
    #[error("capability error: {0}")]
    Capability(String),

    /// Quadrature refinement did not converge; the last two estimates are
    /// attached so the caller can judge how bad it is.
    #[error("quadrature did not converge: last estimates {last} and {previous} (target rel. tol. {target})")]
    QuadratureNonConvergence {
        last: f64,
        previous: f64,
        target: f64,
    },

    /// The Luxemburg bisection never found an admissible scale: the modular
    /// stayed infinite no matter how large alpha was taken.
    #[error("norm divergence: modular remained infinite up to alpha = {max_alpha}")]
    NormDivergence { max_alpha: f64 },

    /// A kernel or operator parameter set violates its contract.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid run configuration; `pointer` is a JSON pointer into the
    /// offending config document.
    #[error("invalid config at {pointer}: {message}")]
    ConfigPointer { pointer: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
