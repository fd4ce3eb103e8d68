use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),
    #[error("invalid gridworld: {0}")]
    InvalidGrid(String),
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("transition probability {0} is not dyadic within the fresh-bit budget")]
    NonDyadic(f64),
    #[error("inconsistent model: {0}")]
    InconsistentModel(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
