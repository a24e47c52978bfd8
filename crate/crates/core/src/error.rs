use thiserror::Error;

use crate::game::Substep;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("the game is already over")]
    GameOver,

    #[error("agent {agent} is not the current player (current player is {current})")]
    InactiveAgent { agent: usize, current: usize },

    #[error("joint action has {got} entries, expected one per player ({expected})")]
    JointArity { got: usize, expected: usize },

    #[error("the current player {0} must act but supplied a no-op")]
    MissingAction(usize),

    #[error("{action} is not accepted at substep {substep:?}")]
    WrongSubstep { action: String, substep: Substep },

    #[error("card {0} does not exist")]
    NoSuchCard(usize),

    #[error("hint {0} does not exist")]
    NoSuchHint(usize),

    #[error("card {0} is locked")]
    LockedCard(usize),

    #[error("card {0} was already observed this turn")]
    RepeatedPeek(usize),

    #[error("cell ({row}, {col}) is not a legal target for card {card}")]
    IllegalTarget { card: usize, row: u8, col: u8 },

    #[error("a no-op move is only allowed when no card can be moved")]
    MoveAvailable,

    #[error("hint {0} is not face down")]
    HintNotFaceDown(usize),

    #[error("hint {0} is not revealed")]
    HintNotRevealed(usize),

    #[error("no card occupies cell ({row}, {col})")]
    EmptyCell { row: u8, col: u8 },

    #[error("cell ({row}, {col}) is outside the {side}x{side} grid")]
    OutOfGrid { row: u8, col: u8, side: u8 },

    #[error("action index {index} is out of range (action count {count})")]
    ActionIndex { index: usize, count: usize },

    #[error("action does not fit the configured layout: {0}")]
    MalformedAction(String),

    #[error("contract violated: {0}")]
    Contract(&'static str),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("replay mismatch: {0}")]
    Replay(String),

    #[error("policy protocol error: {0}")]
    Protocol(String),

    #[error("policy did not answer within {0} ms")]
    Timeout(u64),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed JSON: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
