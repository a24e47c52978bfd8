//! Categorical action indexing and legality masks.
//!
//! The layout is fixed and shared with every external policy:
//!
//! ```text
//! [EndGame][ObserveCard x |Y|][MoveCard x |Y|*g^2][RevealHint x |H|][PlaceHint x |H|*T][NoOp]
//! ```
//!
//! `MoveCard` is card-major, then row-major over the cells. `PlaceHint` is
//! hint-major, then target, where `T = g^2` under cell indexing and `T = |Y|`
//! under card indexing.

use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::board::{bits, Cell};
use crate::config::{GameConfig, HintTargetIndexing};
use crate::error::{Error, Result};
use crate::game::{GameState, HintStatus, Substep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintTarget {
    Cell(Cell),
    Card(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    NoOp,
    EndGame,
    ObserveCard { card: usize },
    MoveCard { card: usize, to: Cell },
    RevealHint { hint: usize },
    PlaceHint { hint: usize, target: HintTarget },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::NoOp => write!(f, "NoOp"),
            Action::EndGame => write!(f, "EndGame"),
            Action::ObserveCard { card } => write!(f, "ObserveCard({card})"),
            Action::MoveCard { card, to } => write!(f, "MoveCard({card}, {to})"),
            Action::RevealHint { hint } => write!(f, "RevealHint({hint})"),
            Action::PlaceHint { hint, target: HintTarget::Cell(c) } => write!(f, "PlaceHint({hint}, cell {c})"),
            Action::PlaceHint { hint, target: HintTarget::Card(i) } => write!(f, "PlaceHint({hint}, card {i})"),
        }
    }
}

/// Coarse action category, used for the benchmark's action mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    EndGame,
    Observe,
    Move,
    Reveal,
    Place,
    NoOp,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::NoOp => ActionKind::NoOp,
            Action::EndGame => ActionKind::EndGame,
            Action::ObserveCard { .. } => ActionKind::Observe,
            Action::MoveCard { .. } => ActionKind::Move,
            Action::RevealHint { .. } => ActionKind::Reveal,
            Action::PlaceHint { .. } => ActionKind::Place,
        }
    }
}

/// Block offsets of the categorical layout for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLayout {
    pub num_cards: usize,
    pub num_hints: usize,
    pub grid_side: usize,
    pub indexing: HintTargetIndexing,
    pub observe_offset: usize,
    pub move_offset: usize,
    pub reveal_offset: usize,
    pub place_offset: usize,
    pub noop_index: usize,
    pub count: usize,
}

impl ActionLayout {
    pub fn new(config: &GameConfig) -> Self {
        let num_cards = config.num_cards();
        let num_hints = config.num_hints();
        let grid_side = config.grid_side();
        let cells = grid_side * grid_side;
        let targets = match config.hint_target_indexing {
            HintTargetIndexing::Cell => cells,
            HintTargetIndexing::Card => num_cards,
        };
        let observe_offset = 1;
        let move_offset = observe_offset + num_cards;
        let reveal_offset = move_offset + num_cards * cells;
        let place_offset = reveal_offset + num_hints;
        let noop_index = place_offset + num_hints * targets;
        Self {
            num_cards,
            num_hints,
            grid_side,
            indexing: config.hint_target_indexing,
            observe_offset,
            move_offset,
            reveal_offset,
            place_offset,
            noop_index,
            count: noop_index + 1,
        }
    }

    fn cells(&self) -> usize {
        self.grid_side * self.grid_side
    }

    pub fn hint_targets(&self) -> usize {
        match self.indexing {
            HintTargetIndexing::Cell => self.cells(),
            HintTargetIndexing::Card => self.num_cards,
        }
    }

    pub const END_GAME: usize = 0;

    pub fn observe(&self, card: usize) -> usize {
        self.observe_offset + card
    }

    pub fn move_card(&self, card: usize, to: Cell) -> usize {
        self.move_offset + card * self.cells() + to.index(self.grid_side)
    }

    pub fn reveal(&self, hint: usize) -> usize {
        self.reveal_offset + hint
    }

    pub fn place_on_cell(&self, hint: usize, cell: Cell) -> usize {
        self.place_offset + hint * self.cells() + cell.index(self.grid_side)
    }

    pub fn place_on_card(&self, hint: usize, card: usize) -> usize {
        self.place_offset + hint * self.num_cards + card
    }

    pub fn encode(&self, action: &Action) -> Result<usize> {
        let bad = |what: &str| Err(Error::MalformedAction(format!("{what} in {action}")));
        match *action {
            Action::EndGame => Ok(Self::END_GAME),
            Action::NoOp => Ok(self.noop_index),
            Action::ObserveCard { card } => {
                if card >= self.num_cards {
                    return bad("card out of range");
                }
                Ok(self.observe(card))
            }
            Action::MoveCard { card, to } => {
                if card >= self.num_cards {
                    return bad("card out of range");
                }
                if !to.in_grid(self.grid_side) {
                    return bad("cell outside grid");
                }
                Ok(self.move_card(card, to))
            }
            Action::RevealHint { hint } => {
                if hint >= self.num_hints {
                    return bad("hint out of range");
                }
                Ok(self.reveal(hint))
            }
            Action::PlaceHint { hint, target } => {
                if hint >= self.num_hints {
                    return bad("hint out of range");
                }
                match (self.indexing, target) {
                    (HintTargetIndexing::Cell, HintTarget::Cell(cell)) if cell.in_grid(self.grid_side) => {
                        Ok(self.place_on_cell(hint, cell))
                    }
                    (HintTargetIndexing::Card, HintTarget::Card(card)) if card < self.num_cards => {
                        Ok(self.place_on_card(hint, card))
                    }
                    _ => bad("hint target does not match the layout"),
                }
            }
        }
    }

    pub fn decode(&self, index: usize) -> Result<Action> {
        if index >= self.count {
            return Err(Error::ActionIndex { index, count: self.count });
        }
        let cells = self.cells();
        Ok(if index == Self::END_GAME {
            Action::EndGame
        } else if index == self.noop_index {
            Action::NoOp
        } else if index < self.move_offset {
            Action::ObserveCard { card: index - self.observe_offset }
        } else if index < self.reveal_offset {
            let k = index - self.move_offset;
            Action::MoveCard { card: k / cells, to: Cell::from_index(k % cells, self.grid_side) }
        } else if index < self.place_offset {
            Action::RevealHint { hint: index - self.reveal_offset }
        } else {
            let k = index - self.place_offset;
            let targets = self.hint_targets();
            let target = match self.indexing {
                HintTargetIndexing::Cell => HintTarget::Cell(Cell::from_index(k % targets, self.grid_side)),
                HintTargetIndexing::Card => HintTarget::Card(k % targets),
            };
            Action::PlaceHint { hint: k / targets, target }
        })
    }

    /// Human-readable table of the block offsets.
    pub fn describe(&self) -> String {
        let rows = [
            ("EndGame", Self::END_GAME, 1),
            ("ObserveCard", self.observe_offset, self.num_cards),
            ("MoveCard", self.move_offset, self.num_cards * self.cells()),
            ("RevealHint", self.reveal_offset, self.num_hints),
            ("PlaceHint", self.place_offset, self.num_hints * self.hint_targets()),
            ("NoOp", self.noop_index, 1),
        ];
        let mut out = format!("{:<12} {:>7} {:>7}\n", "block", "offset", "size");
        for (name, offset, size) in rows {
            out.push_str(&format!("{name:<12} {offset:>7} {size:>7}\n"));
        }
        out.push_str(&format!("{:<12} {:>7} {:>7}\n", "total", "", self.count));
        out
    }
}

/// Number of categorical actions for a configuration.
pub fn action_count(config: &GameConfig) -> usize {
    ActionLayout::new(config).count
}

/// Legality bit-vector over the categorical layout. Bit `i` lives in byte
/// `i / 8` at position `i % 8` (least significant first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionMask {
    bits: BitVec<u8, Lsb0>,
}

impl ActionMask {
    pub fn empty(len: usize) -> Self {
        Self { bits: bitvec![u8, Lsb0; 0; len] }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(len);
        for i in indices {
            mask.set(i);
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn set(&mut self, index: usize) {
        self.bits.set(index, true);
    }

    pub fn is_set(&self, index: usize) -> bool {
        self.bits.get(index).is_some_and(|b| *b)
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn first_set(&self) -> Option<usize> {
        self.bits.first_one()
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.bits.as_raw_slice()
    }

    pub fn to_base64(&self) -> String {
        BASE64.encode(self.as_bytes())
    }

    pub fn from_base64(len: usize, encoded: &str) -> Result<Self> {
        let bytes = BASE64
            .decode(encoded)
            .map_err(|e| Error::MalformedAction(format!("mask is not valid base64: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::MalformedAction(format!(
                "mask has {} bytes, expected {}",
                bytes.len(),
                len.div_ceil(8)
            )));
        }
        let mut bits = BitVec::<u8, Lsb0>::from_vec(bytes);
        bits.truncate(len);
        Ok(Self { bits })
    }
}

/// Canonical indices of every action `agent` may take in `state`, ascending.
pub fn legal_actions(state: &GameState, agent: usize) -> Vec<usize> {
    let layout = ActionLayout::new(state.config());
    legal_actions_with(state, agent, &layout)
}

pub fn legal_actions_with(state: &GameState, agent: usize, layout: &ActionLayout) -> Vec<usize> {
    let noop = vec![layout.noop_index];
    if state.is_terminal() || agent != state.current_player() {
        return noop;
    }
    let board = state.board();
    let unlocked = board.unlocked_mask();
    let mut out = Vec::new();
    match state.substep() {
        Substep::Peek1 => {
            out.push(ActionLayout::END_GAME);
            out.extend(bits(unlocked).map(|c| layout.observe(c)));
        }
        Substep::Peek2 => {
            let first = state.phase().peeked()[0];
            out.extend(bits(unlocked & !(1 << first)).map(|c| layout.observe(c)));
        }
        Substep::Move => {
            for card in bits(unlocked) {
                let targets = board.legal_targets(card);
                let base = layout.move_offset + card * layout.grid_side * layout.grid_side;
                out.extend(targets.indices().map(|cell| base + cell));
            }
            if out.is_empty() {
                return noop;
            }
        }
        Substep::Hint => {
            for (h, hint) in state.hints().iter().enumerate() {
                if hint.status == HintStatus::FaceDown {
                    out.push(layout.reveal(h));
                }
            }
            for (h, hint) in state.hints().iter().enumerate() {
                if hint.status != HintStatus::Revealed {
                    continue;
                }
                match layout.indexing {
                    HintTargetIndexing::Card => {
                        out.extend(bits(unlocked).map(|c| layout.place_on_card(h, c)));
                    }
                    HintTargetIndexing::Cell => {
                        let mut cells: Vec<usize> = bits(unlocked)
                            .map(|c| layout.place_on_cell(h, board.position(c)))
                            .collect();
                        cells.sort_unstable();
                        out.extend(cells);
                    }
                }
            }
            // Reveals sit before placements in the layout, so `out` is sorted.
        }
    }
    out
}

/// Legality mask for `agent` in `state`.
pub fn legal_mask(state: &GameState, agent: usize) -> ActionMask {
    let layout = ActionLayout::new(state.config());
    ActionMask::from_indices(layout.count, legal_actions_with(state, agent, &layout))
}
