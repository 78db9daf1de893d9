use thiserror::Error;

/// Errors raised by the reasoning engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("theorem `{theorem}`: unbound variable {var}")]
    UnboundVariable { theorem: String, var: char },

    #[error("unknown theorem `{0}`")]
    UnknownTheorem(String),

    #[error("arity mismatch for `{head}`: {message}")]
    Arity { head: String, message: String },

    #[error("empty stream")]
    EmptyStream,

    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),

    #[error("invalid declaration: {0}")]
    Declaration(String),

    #[error("invalid goal: {0}")]
    Goal(String),

    #[error("unknown premise {0}")]
    UnknownPremise(usize),

    #[error("expected an Equal body, found `{0}`")]
    NotAnEquation(String),

    #[error("goal not reached")]
    GoalNotReached,

    #[error("cycle detected in theorem graph")]
    Cycle,

    #[error("problem `{0}`: annotated theorem sequence does not solve the goal")]
    AnnotationMismatch(String),

    #[error("no samples to evaluate")]
    EmptySampleSet,

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
