//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("composition does not sum to one (sum = {sum}); within 1e-12 it would be renormalized")]
    CompositionSum { sum: f64 },

    #[error("composition has a negative entry: x[{index}] = {value}")]
    CompositionNegative { index: usize, value: f64 },

    #[error("degenerate state: all partial mass densities are zero")]
    DegenerateState,

    #[error("boundary composition: {0} requires an interior state (all mole fractions above the floor)")]
    BoundaryComposition(&'static str),

    #[error("state outside model domain: {quantity} = {value} not in ({min}, {max})")]
    OutOfDomain {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("no pressure bracket found in ({lo}, {hi})")]
    NoBracket { lo: f64, hi: f64 },

    #[error("volume potential is not strictly decreasing in pressure near p = {p}")]
    NonMonotone { p: f64 },

    #[error("pressure solve is ill-posed: |dV/dp| < {threshold:e} across the bracket (near-incompressible state)")]
    IllPosed { threshold: f64 },

    #[error("{what} did not converge")]
    NoConvergence { what: String },

    #[error("Hessian blows up at incompressible point (rank-one term with lambda = {lambda:e})")]
    RankOneBlowup { lambda: f64 },

    #[error("c_v is undefined at an incompressible point (dv/dp = 0)")]
    CvUndefined,

    #[error("family is not in global mode")]
    NotGlobalMode,

    #[error("family is not in local mode")]
    NotLocalMode,

    #[error("pressure parameter {p} is outside the subdifferential band [{lo}, {hi}]")]
    NotASubgradient { p: f64, lo: f64, hi: f64 },

    #[error("limit assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("unphysical composition: {0}")]
    UnphysicalComposition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("table format error: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
