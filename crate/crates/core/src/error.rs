use thiserror::Error;

use crate::exprcore::ExprError;
use crate::flows::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("odd numerical rank {rank} at {point:?} (singular values {singular_values:?})")]
    OddRank {
        rank: usize,
        point: Vec<f64>,
        singular_values: Vec<f64>,
    },

    #[error("vector is not tangent to the leaf (relative residual {residual:e})")]
    NotInLeaf { residual: f64 },

    /// The partial trajectory is kept so callers tracing near a boundary can use it.
    #[error("trajectory left the domain at t = {}", .trajectory.times.last().copied().unwrap_or(0.0))]
    LeftDomain { trajectory: Box<Trajectory> },

    #[error("invalid flow specification: {0}")]
    InvalidFlow(String),

    #[error("projection onto the submanifold did not converge (residuals {residuals:?})")]
    NoConvergence { residuals: Vec<f64> },

    #[error("defining functions are not regular at {point:?} (rank {rank} < {codim})")]
    RankDeficient {
        point: Vec<f64>,
        rank: usize,
        codim: usize,
    },

    #[error("point {point:?} is not on the submanifold (residual {residual:e})")]
    NotOnSubmanifold { point: Vec<f64>, residual: f64 },

    #[error("function does not vanish on the submanifold at {point:?} (value {value:e})")]
    NotVanishing { point: Vec<f64>, value: f64 },

    #[error("point {point:?} is not a clean intersection point ({kind})")]
    NotClean { point: Vec<f64>, kind: String },

    #[error("member n = {index} is not Poisson at {point:?} (residual {residual:e})")]
    MemberNotPoisson {
        index: f64,
        point: Vec<f64>,
        residual: f64,
    },

    #[error("image point {point:?} is off the target submanifold (residual {residual:e})")]
    ImageOffTarget { point: Vec<f64>, residual: f64 },

    #[error("flow left the submanifold at {point:?} (residual {residual:e})")]
    OffSubmanifold { point: Vec<f64>, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("scenario parse error at line {line}: {message}")]
    ScenarioParse { line: usize, message: String },

    #[error("unresolved reference at line {line}: {message}")]
    Unresolved { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Serialize(String),
}
