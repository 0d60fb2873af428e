use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid vertex label `{0}`")]
    InvalidLabel(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("directed self-loop at `{0}`")]
    SelfLoop(String),
    #[error("graph has {0} vertices; at most {max} are supported", max = crate::set::MAX_VERTICES)]
    TooManyVertices(usize),
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("graph is not a DAG")]
    NotDag,
    #[error("graph is not unconfounded")]
    Confounded,
    #[error("query sets must be pairwise disjoint")]
    OverlappingSets,
    #[error("query set must be nonempty")]
    EmptyQuerySet,
    #[error("vertex `{0}` is already fixed")]
    AlreadyFixed(String),
    #[error("vertex `{0}` is not fixable")]
    NotFixable(String),
    #[error("set {0} has no fixable ordering")]
    SetNotFixable(String),
    #[error("invalid topological order: {0}")]
    InvalidOrder(String),
    #[error("state space has {0} cells; the limit is {limit}", limit = crate::dist::MAX_CELLS)]
    StateSpaceTooLarge(u128),
    #[error("variables do not match graph vertices: {0}")]
    NameMismatch(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("kernel and conditional graph disagree on fixed vertices")]
    FixedSetMismatch,
    #[error("extended independence requires that at most one side contains fixed variables")]
    BothSidesFixed,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid equation system: {0}")]
    InvalidSystem(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
