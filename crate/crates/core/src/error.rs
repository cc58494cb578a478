use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding matrix is empty")]
    EmptyMatrix,
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("value buffer has {actual} entries, expected {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("geodesic distance needs a neighbor graph and is not defined for a single vector pair")]
    GeodesicNotPointwise,
    #[error("k = {k} is too large (at most {max})")]
    KTooLarge { k: usize, max: usize },
    #[error("k = {k} is outside [{min}, {max}]")]
    KOutOfRange { k: usize, min: usize, max: usize },
    #[error("row {0} is the zero vector and has no direction")]
    ZeroRow(usize),
    #[error("requested {dims} output dimensions, at most {max} are available")]
    DimsTooLarge { dims: usize, max: usize },
    #[error("perplexity {perplexity} needs at least {needed} points, got {n}")]
    PerplexityTooLarge { perplexity: f64, needed: usize, n: usize },
    #[error("index needs at least two clusters")]
    SingleCluster,
    #[error("every point is its own cluster (N = K)")]
    DegenerateAllPoints,
    #[error("centroids of clusters {0} and {1} coincide")]
    CoincidentCentroids(usize, usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("bad cluster range [{k_min}, {k_max}] for {n} points")]
    BadRange { k_min: usize, k_max: usize, n: usize },
    #[error("budget {budget} must exceed the {init_points} initial points and fit the range of {candidates} candidates")]
    BudgetTooSmall {
        budget: usize,
        init_points: usize,
        candidates: usize,
    },
    #[error("percentile {0} is outside (0, 1]")]
    BadPercentile(f64),
    #[error("invalid cluster assignment: {0}")]
    InvalidAssignment(String),
    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),
    #[error("bad magic {0:?}, expected \"OWCL\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    VersionUnsupported(u16),
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("CSV parse error at row {row}, column {col}: {msg}")]
    CsvParse { row: usize, col: usize, msg: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
