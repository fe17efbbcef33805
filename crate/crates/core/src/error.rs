use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{qubits} qubits exceeds the limit of {max} for this operation")]
    TooManyQubits { qubits: usize, max: usize },
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("gate is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("qubit index {0} repeated")]
    RepeatedSite(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("graph is not bipartite: edge ({0}, {1}) closes an odd cycle")]
    NotBipartite(usize, usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid graph spec `{0}` (expected chain:N, lattice:RxC or file:<path>)")]
    BadGraphSpec(String),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("qubit count {0} must be even")]
    OddQubitCount(usize),
    #[error(
        "support of the first state is not contained in the support of the second (leakage {0:e})"
    )]
    SupportViolation(f64),
    #[error("computed E = {computed} does not match the color-class prediction {predicted}")]
    PredictionMismatch { computed: f64, predicted: f64 },
    #[error("{0}")]
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
