use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("grid too small: axis {axis} has {nodes} nodes, need at least 3")]
    GridTooSmall { axis: usize, nodes: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("gauge trace constraint violated for {slot}: residual {residual:e}")]
    GaugeConstraintViolated { slot: String, residual: f64 },

    #[error("k-vector field is not projectable: component {component} of X{alpha} depends on {z}")]
    NotProjectable {
        alpha: usize,
        component: String,
        z: String,
    },

    #[error("CFL condition violated: c*dt/dx = {cfl:.6} > 1")]
    CflViolated { cfl: f64 },

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for malformed input: syntax, schema, chart or gauge declarations.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Syntax { .. }
                | Error::UnboundVariable(_)
                | Error::InvalidChart(_)
                | Error::InvalidGauge(_)
                | Error::GaugeConstraintViolated { .. }
                | Error::InvalidConfig(_)
        )
    }
}
