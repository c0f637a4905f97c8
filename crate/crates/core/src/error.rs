use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing {0} section")]
    MissingSection(&'static str),
    #[error("line {line}: node id {id} out of range 1..={node_count}")]
    NodeOutOfRange { line: usize, id: usize, node_count: usize },
    #[error("line {line}: negative arc cost {cost}")]
    NegativeCost { line: usize, cost: String },
}

impl ParseError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax { line, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    /// No active moat has a payable entering arc; some terminal cannot be reached.
    #[error("stalled growth at iteration {iteration}: no active moat has a payable incoming arc")]
    StalledGrowth { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AliveError {
    #[error("invariant breach at iteration {iteration}: {detail}")]
    InvariantBreach { iteration: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance too large for {method}: {actual} exceeds limit {limit}")]
    Guard { method: &'static str, actual: usize, limit: usize },
    #[error("instance is infeasible: some terminal is unreachable from the root")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("input graph is disconnected")]
    Disconnected,
    #[error("graph too large for exhaustive search: {actual} nodes exceeds {limit}")]
    Guard { actual: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoatError {
    #[error("brute-force enumeration limited to {limit} nodes, instance has {actual}")]
    Guard { actual: usize, limit: usize },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("trace line {line}: {message}")]
    Format { line: usize, message: String },
}
