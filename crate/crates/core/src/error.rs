use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{mode} pump g = {g} is at or above its instability threshold {threshold}")]
    AboveThreshold {
        mode: &'static str,
        g: f64,
        threshold: f64,
    },

    #[error(
        "no steady state reached by t = {t} (residual {residual:e}, max Re eig {max_re_eig:e})"
    )]
    NoSteadyState {
        t: f64,
        residual: f64,
        max_re_eig: f64,
    },

    #[error("trajectory {index} diverged at t = {t}")]
    Diverged { index: usize, t: f64 },

    #[error("unstable drift matrix (max Re eig {max_re_eig:e})")]
    Unstable { max_re_eig: f64 },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("trajectory record carries no Wiener increments")]
    MissingIncrements,

    #[error("filter window {t_filter} exceeds record span {span}")]
    WindowTooLong { t_filter: f64, span: f64 },

    #[error("class {0} has too few shots")]
    EmptyClass(u8),
}
