use thiserror::Error;

use crate::ergm::ErgmFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown node label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),

    #[error("self-loop on node `{0}`; the diagonal of the adjacency matrix is structurally absent")]
    SelfLoop(String),

    #[error("invalid dyad ({i}, {j}) for a network with {n} nodes")]
    InvalidDyad { i: usize, j: usize, n: usize },

    #[error("network must have at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("missing value for node `{node}` in covariate `{covariate}`")]
    MissingNodeValue { covariate: String, node: String },

    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),

    #[error("invalid model term: {0}")]
    InvalidTerm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("network too large for {what}: n = {n}, limit {limit}")]
    TooLarge { what: &'static str, n: usize, limit: usize },

    #[error("separation detected: coefficients diverge after {iterations} iterations")]
    Separation { iterations: usize },

    #[error("design matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error(
        "observed statistics lie outside the convex hull of the simulated statistics at \
         iteration {iteration}; increase the number of samples or re-center the starting value"
    )]
    HullViolation { iteration: usize, fit: Box<ErgmFit> },

    #[error("Monte-Carlo MLE did not converge after {iterations} outer iterations")]
    NotConverged { iterations: usize, fit: Box<ErgmFit> },

    #[error("non-finite full-conditional parameter in `{step}` at iteration {iteration}")]
    NonFiniteConditional { step: &'static str, iteration: usize },

    #[error("sampler invariant violated after `{step}` at iteration {iteration}: {what}")]
    InvariantViolation { step: &'static str, iteration: usize, what: String },

    #[error("too few draws: {got} (need at least {need})")]
    TooFewDraws { got: usize, need: usize },

    #[error("labels are all of one class; need at least one positive and one negative")]
    DegenerateLabels,
}
