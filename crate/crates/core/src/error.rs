use thiserror::Error;

/// Errors produced by the differentiator toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `nu2` evaluated at the origin, where the right-hand side is the inclusion `[-1, 1]`.
    #[error("set-valued point: nu2(0) is the interval [-1, 1]")]
    SetValued,

    #[error("inversion out of range: no bracket for Phi(x) = {z}")]
    InversionOutOfRange { z: f64 },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("not admissible: {0}")]
    NotAdmissible(String),

    #[error("bound not applicable: requires k1^2 >= 8 k2 (k1 = {k1}, k2 = {k2})")]
    BoundNotApplicable { k1: f64, k2: f64 },

    #[error("Lipschitz constant exceeds admissible maximum: L = {l} >= Lbar = {lbar}")]
    LipschitzTooLarge { l: f64, lbar: f64 },

    #[error("tradeoff parameter must exceed Lipschitz constant: gamma = {gamma}, L = {l}")]
    TradeoffTooSmall { gamma: f64, l: f64 },

    #[error("search did not bracket a maximum")]
    NoBracket,

    #[error("simulation diverged at step {step} (t = {time})")]
    Diverged { step: usize, time: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input or infeasibility).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure(_)
                | Error::InversionOutOfRange { .. }
                | Error::NoBracket
                | Error::Diverged { .. }
        )
    }

    /// True when the request is well formed but cannot be guaranteed (gamma <= L, L >= Lbar).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::LipschitzTooLarge { .. } | Error::TradeoffTooSmall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
