use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("not a number: {0:?}")]
    Number(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Eof(String),
}

impl ParseError {
    pub(crate) fn at(line: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) listed twice")]
    DuplicateEdge(usize, usize),
    #[error("vertex index out of range in edge ({i}, {j}) for n = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("edge ({0}, {1}) has zero weight")]
    ZeroWeight(usize, usize),
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("graph is not a single cycle")]
    NotACycle,
    #[error("edge probability must lie strictly between 0 and 1, got {0}")]
    InvalidProbability(f64),
    #[error("point coordinate {0} lies outside [0, 1]")]
    OutOfBox(usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("alpha = {alpha} outside 1..={max}")]
    BadAlpha { alpha: i64, max: i64 },
    #[error("vertex sets overlap")]
    Overlap,
    #[error("odd cycle inequality needs an odd subset D")]
    EvenD,
    #[error("set too small for this family")]
    SetTooSmall,
    #[error("construction needs n >= {min}, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("no inequality of family {family} with s = {s} for n = {n}")]
    BadIndex { family: u8, s: usize, n: usize },
    #[error("unknown relaxation class {0:?}")]
    BadClass(String),
    #[error("variable {0} is not in the system's variable universe")]
    OutsideUniverse(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("x lies outside the projection of the system ({0})")]
    InfeasibleAtX(String),
    #[error("relaxation LP is unbounded")]
    Unbounded,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("n = {n} exceeds the vertex-enumeration cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("cav = vex at this point, the gap ratio is undefined")]
    DegenerateGap,
    #[error("the two parts share {0} vertices, at most one is allowed")]
    SharedTooMuch(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("requested measure {requested} exceeds available {available}")]
    TooMuch {
        requested: String,
        available: String,
    },
    #[error("weights must be nonnegative and sum to one")]
    BadWeights,
    #[error("sets do not partition [0, 1)")]
    BadPartition,
    #[error("interval [{0}, {1}) is not inside [0, 1)")]
    BadInterval(String, String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    #[error("bad study configuration: {0}")]
    BadConfig(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
