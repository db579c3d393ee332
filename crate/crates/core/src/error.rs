use thiserror::Error;

/// Everything that can go wrong inside the engine.
///
/// Absence of a topic is a value (`Option`), not an error; errors are reserved
/// for contract violations and for I/O and syntax failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid IRI: {0}")]
    InvalidIri(String),

    #[error("duplicate topic id: {0}")]
    DuplicateId(String),

    #[error("association must have at least one member")]
    EmptyAssociation,

    #[error("member must have at least one player")]
    EmptyMember,

    #[error("unknown topic: {0}")]
    UnknownTopic(String),

    #[error("cannot merge topic {0} with itself")]
    SelfMerge(String),

    #[error("map is sealed; mutation rejected")]
    Sealed,

    /// Malformed XML or an unrecoverable XTM structure problem.
    /// Line and column are 1-based positions into the source document.
    #[error("{line}:{column}: {message}")]
    Parse {
        line: u64,
        column: u64,
        message: String,
    },

    /// Query text rejected by the query parser. `offset` is a byte offset
    /// into the query string; `expected` names the tokens that would have
    /// been accepted there.
    #[error("query syntax error at byte {offset}: expected {expected}")]
    QuerySyntax { offset: usize, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
