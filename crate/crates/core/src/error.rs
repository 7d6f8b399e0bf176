use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("no admissible sample points: domain is empty after guards")]
    EmptyDomain,

    #[error("evaluation failed: {0}")]
    Eval(String),

    #[error("basis matrices are linearly dependent")]
    DependentBasis,

    #[error("matrices must be square and of equal size")]
    ShapeMismatch,

    #[error("bracket not closed: [E{0},E{1}] leaves the span (residual {2:.3e})")]
    NotClosed(usize, usize, f64),

    #[error("the algebra has nonzero first prolongation (dimension {0})")]
    ProlongationNonzero(usize),

    #[error("coefficient matrix is singular at {point:?}")]
    SingularCoframe { point: Vec<f64> },

    #[error("coframe is not fully regular: order {order} has ranks {ranks:?} across grid (witnesses {witnesses:?})")]
    NotFullyRegular {
        order: usize,
        ranks: Vec<usize>,
        witnesses: Vec<Vec<f64>>,
    },

    #[error("`{label}` is not a function of the invariants: points {p:?} and {q:?} share h but differ by {gap:.3e}")]
    NotFunctionOfInvariants {
        label: String,
        p: Vec<f64>,
        q: Vec<f64>,
        gap: f64,
    },

    #[error("cannot express coordinates through the invariants: {0}")]
    InverseRequired(String),

    #[error("algebroid failed certification: {0}")]
    Uncertified(String),

    #[error("isotropy bracket not closed at {point:?} (residual {residual:.3e})")]
    IsotropyNotClosed { point: Vec<f64>, residual: f64 },

    #[error("exponential chart is not injective on the box (half-width {0})")]
    ChartNotInjective(f64),

    #[error("point {0:?} lies outside the chart")]
    OutsideChart(Vec<f64>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
