use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("total dimension {requested} exceeds the configured limit {limit}")]
    DimensionLimit { requested: usize, limit: usize },
    #[error("Kraus list of length {requested} exceeds the configured limit {limit}")]
    KrausLimit { requested: usize, limit: usize },
    #[error("a channel needs at least one Kraus operator")]
    EmptyKraus,
    #[error("factor index {index} out of range for {len} factors")]
    BadIndex { index: usize, len: usize },
    #[error("not a permutation: {0:?}")]
    BadPermutation(Vec<usize>),
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("firing `{transition}` puts a second token on `{place}`")]
    SafetyViolation { transition: String, place: String },
    #[error("more than {bound} reachable markings")]
    BoundExceeded { bound: usize },
    #[error("safety of the net was not verified within the exploration bound")]
    SafetyUnverified,
    #[error("not an occurrence net: {0}")]
    NotAnOccurrenceNet(String),
    #[error("not a configuration: {0}")]
    NotAConfiguration(String),
    #[error("marking is not reachable: {0}")]
    Unreachable(String),
    #[error("target marking is not reachable from the source marking")]
    NotReachableFrom,

    #[error("signature mismatch on `{transition}`: {detail}")]
    SignatureMismatch { transition: String, detail: String },
    #[error("missing channel for transition `{0}`")]
    MissingChannel(String),
    #[error("missing dimension for place `{0}`")]
    MissingDimension(String),
    #[error("annotation does not fit the net: {0}")]
    AnnotationMismatch(String),
    #[error("restriction is disconnected: {0}")]
    DisconnectedRestriction(String),

    #[error("extension adds negative event `{0}`")]
    IncompatibleExtension(String),
    #[error("event `{0}` in a drop cluster is negative")]
    NegativeEventInCluster(String),
    #[error("events are not pairwise in minimal conflict: `{0}` and `{1}`")]
    NotAClique(String, String),
    #[error("cluster of {size} events exceeds the cap of {cap}")]
    ClusterTooLarge { size: usize, cap: usize },
    #[error("`{0}` and `{1}` are in conflict across clusters")]
    CrossClusterConflict(String, String),

    #[error("`{0}` must be positive to be joined")]
    PolarityMismatch(String),
    #[error("signal spaces differ: h({p}) = {hp}, h({n}) = {hn}")]
    SignalSpaceMismatch {
        p: String,
        n: String,
        hp: usize,
        hn: usize,
    },
    #[error("invalid join: {0}")]
    InvalidJoin(String),
    #[error("net is not race-free: `{0}` and `{1}`")]
    NotRaceFree(String, String),

    #[error("no environment state for negative event `{0}`")]
    MissingEnvInput(String),
    #[error("not a quantum Petri net: {0}")]
    NotAQpn(String),

    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors signalling that a configured resource bound was hit.
    pub fn is_resource_bound(&self) -> bool {
        matches!(
            self,
            Error::BoundExceeded { .. }
                | Error::DimensionLimit { .. }
                | Error::KrausLimit { .. }
                | Error::ClusterTooLarge { .. }
                | Error::SafetyUnverified
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
