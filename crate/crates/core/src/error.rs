use thiserror::Error;

/// Library error type. The CLI maps `InvalidParameter`/`Parse` onto exit
/// status 2 and every regime refusal onto exit status 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported exponent s = {s}; this toolkit covers 1/2 < s <= 1")]
    UnsupportedExponent { s: f64 },

    #[error("approximation rate undefined for rational points")]
    RateUndefinedForRational,

    #[error("p = {p} and q = {q} are not coprime")]
    NotCoprime { p: String, q: String },

    #[error("outside supported regime: {0}")]
    RegimeRefused(String),

    #[error("series does not converge at this point ({verdict}); refusing limit evaluation")]
    Divergent { verdict: String },

    #[error("requested tolerance {requested:e} unreachable; achieved error bound {achieved:e}")]
    ToleranceUnreachable { requested: f64, achieved: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("point syntax error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
