use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("term {term}: matrix is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { term: usize, deviation: f64 },
    #[error("term {term}: weight {weight:e} is below the zero threshold")]
    ZeroTerm { term: usize, weight: f64 },
    #[error("term {term}: dimension {found} does not match declared dimension {expected}")]
    DimensionMismatch {
        term: usize,
        expected: usize,
        found: usize,
    },
    #[error("Hamiltonian has no terms")]
    EmptyHamiltonian,
    #[error("term index {index} out of range for {len} terms")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid order {0}: must be 1 or an even integer >= 2")]
    InvalidOrder(u32),
    #[error("enumeration needs {required} tuples, budget is {budget}")]
    BudgetExceeded { required: f64, budget: f64 },
    #[error("subset is empty")]
    EmptySubset,
    #[error("epsilon {eps} outside valid range (0, {max})")]
    EpsilonOutOfRange { eps: f64, max: f64 },
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("N_B = {nb} is below the lower bound {bound}")]
    BelowLowerBound { nb: f64, bound: f64 },
    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("no sign change of the cost difference on [{lo:e}, {hi:e}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("post-selected branch has zero amplitude")]
    PostSelectionFailed,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
