use thiserror::Error;

/// Errors raised by grid construction, operator assembly and the solvers.
///
/// Scalar payloads are carried as `f64` so the error type stays independent
/// of the scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QviError {
    #[error("invalid grid on axis {axis}: {reason}")]
    InvalidGrid { axis: usize, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what} = {value} is not a grid node; nearest node is {nearest}")]
    OffGrid {
        what: &'static str,
        value: f64,
        nearest: f64,
    },

    #[error("no switch point in bracket [{lo}, {hi}] after {expansions} expansions")]
    NoSwitchPoint { lo: f64, hi: f64, expansions: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("diffusion matrix at interior node {node} is not symmetric: entry ({row}, {col})")]
    NonSymmetricDiffusion { node: usize, row: usize, col: usize },

    #[error("diffusion matrix at interior node {node} has negative diagonal on axis {axis}")]
    NegativeDiffusion { node: usize, axis: usize },

    #[error("intervention from row {row} lands on {target}, which is not a lower interior index")]
    InterventionOrder { row: usize, target: usize },

    #[error("intervention from row {row} does not land on an interior grid node")]
    InterventionOffGrid { row: usize },

    #[error("transformed operator row {row}: {reason}")]
    TransformRow { row: usize, reason: String },

    #[error("stationary solve requires a contraction, but row {row} of I + hL sums to {sum}")]
    NotContractive { row: usize, sum: f64 },

    #[error("stability condition violated: worst margin {margin} at time index {time_index}, node {node}, control {control}")]
    Unstable {
        margin: f64,
        time_index: usize,
        node: usize,
        control: usize,
    },

    #[error("sparse factorization is singular at pivot column {pivot}")]
    Singular { pivot: usize },

    #[error("sweep iteration did not converge in {iterations} iterations (last residual {residual})")]
    SweepNotConverged { iterations: usize, residual: f64 },

    #[error("linear solve residual {residual} exceeds bound {bound}")]
    Residual { residual: f64, bound: f64 },

    #[error("policy iteration did not converge in {max_sweeps} sweeps (sup-norm changes {history:?})")]
    NotConverged { max_sweeps: usize, history: Vec<f64> },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("time step {k}: {source}")]
    AtStep {
        k: usize,
        #[source]
        source: Box<QviError>,
    },

    #[error("δx = {delta_x}: {source}")]
    AtResolution {
        delta_x: f64,
        #[source]
        source: Box<QviError>,
    },
}

impl QviError {
    pub(crate) fn at_step(self, k: usize) -> Self {
        match self {
            e @ QviError::AtStep { .. } => e,
            e => QviError::AtStep {
                k,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T, E = QviError> = std::result::Result<T, E>;
