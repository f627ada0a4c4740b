use thiserror::Error;

/// Errors raised by model construction, the Hamiltonian engine and the solvers.
///
/// Variants split into two families: validation failures (bad input, caller
/// error) and numerical failures (the computation itself broke down). The CLI
/// maps them to distinct exit codes through [`Error::is_validation`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("velocity set is not symmetric: no mirror node for v = {velocity} (mass {mass})")]
    Asymmetric { velocity: f64, mass: f64 },

    #[error("masses sum to {sum}, expected 1")]
    Normalization { sum: f64 },

    #[error("non-finite integrand value {value} at node {index} (v = {velocity:?})")]
    NonFiniteIntegrand {
        index: usize,
        velocity: Vec<f64>,
        value: f64,
    },

    #[error("CFL violation: dt = {dt} exceeds cfl * dx / alpha = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("could not bracket the dispersion root for p = {p:?}: upper bound exceeded 2^60")]
    BracketOverflow { p: Vec<f64> },

    #[error(
        "quadrature under-resolved at p = {p:?}: residual {residual:e} above tolerance {tolerance:e}; \
         refine the velocity quadrature near v = {suggest:?}"
    )]
    Underresolved {
        p: Vec<f64>,
        residual: f64,
        tolerance: f64,
        suggest: Vec<f64>,
    },

    #[error("Legendre supremum hits the p-grid boundary at q = {q}; increase p_span")]
    LegendreBoundary { q: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_) | Error::Asymmetric { .. } | Error::Normalization { .. } | Error::Cfl { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
