//! Error type shared by all solvers and checks.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),

    #[error("field has {got} nodes but grid has {expected}")]
    ShapeMismatch { got: usize, expected: usize },

    #[error("field contains a non-finite entry at node {0}")]
    NonFinite(usize),

    #[error("density must be strictly positive (min {min:.3e} at node {node})")]
    NonPositiveDensity { min: f64, node: usize },

    #[error("density mass is {mass:.17} instead of 1")]
    MassNotUnit { mass: f64 },

    #[error("invalid entropy model: {0}")]
    InvalidEntropy(String),

    #[error("positivity lost during diffusion step (min {min:.3e}); dt too large")]
    PositivityLoss { min: f64 },

    #[error("implicit diffusion solve did not converge ({0})")]
    DiffusionSolve(String),

    #[error("conjugate gradient failed to converge: residual {residual:.3e} after {iters} iterations")]
    CgNonConvergence { residual: f64, iters: usize },

    #[error("source term is not mean-zero (mean {0:.3e})")]
    NotMeanZero(f64),

    #[error("dynamic transport solver did not converge within {0} iterations")]
    TransportNonConvergence(usize),

    #[error("LP oracle: grid has {0} nodes, oracle is capped at {1}")]
    LpSizeCap(usize, usize),

    #[error("LP oracle: marginal masses differ by {0:.3e}")]
    LpInfeasible(f64),

    #[error("LP oracle: simplex iteration cap reached")]
    LpIterationCap,

    #[error("parameter out of range: {0}")]
    BadParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
