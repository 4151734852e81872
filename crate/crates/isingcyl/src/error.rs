use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0} terminals exceed the exact Steiner cap {1} and the surrogate is disabled")]
    TooManyTerminals(usize, usize),
    #[error("brute-force Pfaffian limited to dimension <= 12, got {0}")]
    DimensionTooLarge(usize),
    #[error("missing moment for subset {0:?}")]
    MissingMoment(Vec<usize>),
    #[error("root solver: found {found} roots for k1={k1}, expected {expected}; refine the grid")]
    RootCount { k1: f64, found: usize, expected: usize },
    #[error("root solver: B(k1)={0} exceeds (M+1)/M, complex roots are not supported")]
    ComplexRoots(f64),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("parameters not on the critical line: t1={t1}, t2={t2}")]
    NotCritical { t1: f64, t2: f64 },
    #[error("scale {0} outside the admissible range")]
    ScaleOutOfRange(i32),
    #[error("coincident points")]
    CoincidentPoints,
    #[error("repeated edge {0:?}")]
    RepeatedEdge(crate::lattice::Edge),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("sector ({0},{1}) not handled by this operator")]
    WrongSector(usize, usize),
    #[error("kernel support violates the precondition: {0}")]
    Support(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
}

impl Error {
    /// True for failures of a numerical routine rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootCount { .. } | Error::ComplexRoots(_) | Error::Singular(_) | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
