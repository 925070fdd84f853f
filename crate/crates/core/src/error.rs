use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T> = std::result::Result<T, SpnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpnError {
    #[error("invalid variable `{name}`: {detail}")]
    InvalidVariable { name: String, detail: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown state `{state}` for variable `{variable}`")]
    UnknownState { variable: String, state: String },

    #[error("invalid value for variable `{variable}`: {detail}")]
    InvalidValue { variable: String, detail: String },

    #[error("variable `{0}` is bound more than once")]
    DuplicateBinding(String),

    #[error("malformed assignment `{0}`")]
    MalformedAssignment(String),

    #[error("structural error at {node}: {detail}")]
    Structure { node: NodeId, detail: String },

    #[error("cycle detected through {0}")]
    Cycle(NodeId),

    #[error("{0} is not a sum node")]
    NotASumNode(NodeId),

    #[error("{0} does not represent any variable")]
    NotRepresenting(NodeId),

    #[error("query and evidence both bind `{0}`")]
    OverlappingQuery(String),

    #[error("evidence has zero probability")]
    InconsistentEvidence,

    #[error("derivatives are undefined: S(x) = 0")]
    UndefinedDerivative,

    #[error("row {row} has zero probability under the model")]
    ZeroProbabilityRow { row: usize },

    #[error("no explanation: evidence has zero max-probability")]
    NoExplanation,

    #[error("the network is not selective ({0})")]
    NotSelective(String),

    #[error("exhaustive enumeration unavailable: {0}")]
    NotEnumerable(String),

    #[error("unsupported query: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sum node {0} has zero total weight")]
    ZeroMass(NodeId),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error at line {line}, column {column}: {detail}")]
    Parse { line: usize, column: usize, detail: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("io error: {0}")]
    Io(String),
}

impl SpnError {
    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SpnError::Numerical(_)
                | SpnError::UndefinedDerivative
                | SpnError::ZeroMass(_)
                | SpnError::InconsistentEvidence
                | SpnError::NoExplanation
                | SpnError::ZeroProbabilityRow { .. }
        )
    }
}

impl From<std::io::Error> for SpnError {
    fn from(e: std::io::Error) -> Self {
        SpnError::Io(e.to_string())
    }
}
