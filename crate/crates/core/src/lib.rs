//! Engine for the Yokai learning environment: a cooperative, hidden-information
//! card game where agents peek at face-down cards and move them on a grid until
//! every colour forms a single connected cluster.
//!
//! The crate is organised bottom-up:
//!
//! - [`config`], [`board`] and [`game`] hold the rules and the ground-truth state.
//! - [`action`] fixes the categorical action layout and legality masks.
//! - [`observation`] derives per-seat views under hidden information.
//! - [`reward`] turns terminal states and step events into rewards.
//! - [`symmetry`] implements recolouring and rotation for other-play.
//! - [`vec_env`] steps many games in lock-step and measures throughput.
//! - [`agents`] contains scripted baselines and the external-policy wire protocol.
//! - [`harness`] runs matchups, cross-play, the diagnostic test and exports.

pub mod action;
pub mod agents;
pub mod board;
pub mod config;
pub mod error;
pub mod game;
pub mod harness;
pub mod observation;
pub mod reward;
pub mod rng;
pub mod symmetry;
pub mod vec_env;

pub use action::{Action, ActionLayout, ActionMask, HintTarget};
pub use board::{BoardState, Cell};
pub use config::{GameConfig, HintDeckSpec, HintTargetIndexing, Variant};
pub use error::{Error, Result};
pub use game::{Event, EventList, GameState, HintCard, HintStatus, Outcome, Substep, TurnPhase};
pub use observation::{Encoding, MemoryMode, Observation, SeatView};

/// Upper bounds shared by the fixed-size state arrays.
pub const MAX_CARDS: usize = 16;
pub const MAX_HINTS: usize = 10;
pub const MAX_PLAYERS: usize = 4;
pub const MAX_GRID_SIDE: usize = 10;
