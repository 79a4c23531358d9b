use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("adversary admits no infinite sequence: {0}")]
    EmptyAdversary(String),
    #[error("bad alphabet: {0}")]
    BadAlphabet(String),
    #[error("dead end: {0}")]
    DeadEnd(String),
    #[error("bad safety automaton: {0}")]
    BadAutomaton(String),
    #[error("bad value domain: {0}")]
    BadValues(String),
    #[error("inadmissible word: {0}")]
    InadmissibleWord(String),
    #[error("bad input vector: {0}")]
    BadInputs(String),
    #[error("enumeration needs {needed} prefixes, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("prefixes have different shapes (n {left_n}/{right_n}, depth {left_depth}/{right_depth})")]
    DepthMismatch {
        left_n: usize,
        right_n: usize,
        left_depth: usize,
        right_depth: usize,
    },
    #[error("view {view} is compatible with several values {values:?}")]
    AmbiguousView { view: String, values: Vec<i64> },
    #[error("no decision table entry for the view of process {process} at round {round}")]
    MissingView { process: u32, round: usize },
    #[error("word has {len} rounds but decisions happen at round {needed}")]
    WordTooShort { len: usize, needed: usize },
    #[error("invalid process set: {0}")]
    BadProcessSet(String),
    #[error("malformed spec: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
