//! Ground-truth game state and the turn state machine.
//!
//! A turn has four substeps: two private peeks, one move and one hint action
//! (reveal a face-down hint or place a revealed one). Instead of the first
//! peek the current player may end the game. The game also ends once every
//! hint has been placed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::action::{Action, HintTarget};
use crate::board::{bits, BoardState, Cell};
use crate::config::{GameConfig, HintTargetIndexing};
use crate::error::{Error, Result};
use crate::{MAX_CARDS, MAX_HINTS, MAX_PLAYERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintStatus {
    FaceDown,
    Revealed,
    Placed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HintCard {
    /// Colour set as a bitmask over colour indices.
    pub colours: u8,
    pub status: HintStatus,
    pub placed_on: Option<usize>,
}

impl HintCard {
    pub fn face_down(colours: u8) -> Self {
        Self { colours, status: HintStatus::FaceDown, placed_on: None }
    }

    pub fn colour_list(&self) -> Vec<u8> {
        (0..8).filter(|c| self.colours >> c & 1 == 1).collect()
    }

    pub fn allows(&self, colour: u8) -> bool {
        self.colours >> colour & 1 == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substep {
    Peek1,
    Peek2,
    Move,
    Hint,
}

impl Substep {
    /// 1-based position within the turn.
    pub fn number(self) -> u8 {
        match self {
            Substep::Peek1 => 1,
            Substep::Peek2 => 2,
            Substep::Move => 3,
            Substep::Hint => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub won: bool,
    pub ended_early: bool,
    /// Final score; only defined for won games.
    pub score: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TurnPhase {
    pub current_player: usize,
    pub substep: Substep,
    peeked: [u8; 2],
    num_peeked: u8,
    pub terminal: bool,
    pub ended_early: bool,
    pub outcome: Option<Outcome>,
}

impl TurnPhase {
    fn start_of_turn(player: usize) -> Self {
        Self {
            current_player: player,
            substep: Substep::Peek1,
            peeked: [0; 2],
            num_peeked: 0,
            terminal: false,
            ended_early: false,
            outcome: None,
        }
    }

    /// Cards observed so far in the current turn.
    pub fn peeked(&self) -> &[u8] {
        &self.peeked[..self.num_peeked as usize]
    }

    pub fn peeked_mask(&self) -> u16 {
        self.peeked().iter().fold(0, |m, &c| m | 1 << c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// A card no agent had looked at before was observed.
    PeekedNewTeamCard { card: usize },
    /// The number of complete colours exceeded its maximum so far this episode.
    ClusterCountIncreasedBeyondMax { complete: usize },
    HintPlacedCorrect { hint: usize, card: usize },
    HintPlacedWrong { hint: usize, card: usize },
    GameEnded { early: bool, won: bool },
}

pub type EventList = SmallVec<[Event; 4]>;

/// Terms of the final score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreTerms {
    pub face_down: usize,
    pub not_placed: usize,
    pub correct: usize,
    pub wrong: usize,
}

impl ScoreTerms {
    pub fn score(&self) -> i32 {
        5 * self.face_down as i32 + 2 * self.not_placed as i32 + self.correct as i32 - self.wrong as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    pub(crate) config: GameConfig,
    pub(crate) seed: u64,
    pub(crate) board: BoardState,
    pub(crate) hints: [HintCard; MAX_HINTS],
    pub(crate) phase: TurnPhase,
    /// Per agent, every card it has ever peeked this episode.
    pub(crate) peek_history: [u16; MAX_PLAYERS],
    /// Per card, the agents that have peeked it.
    pub(crate) team_peeked: [u8; MAX_CARDS],
    pub(crate) max_complete: u8,
    pub(crate) step_count: u32,
}

impl GameState {
    /// Deal a fresh game. Identical `(config, seed)` always give identical states.
    pub fn new(config: GameConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.num_colours();

        let mut colours: Vec<u8> = (0..k as u8).flat_map(|c| std::iter::repeat_n(c, k)).collect();
        colours.shuffle(&mut rng);
        let board = BoardState::centred_block(config.grid_side(), k, &colours)?;

        let mut deck: Vec<u8> = Vec::with_capacity(config.num_hints());
        for (size_minus_one, &count) in config.hint_deck.by_size().iter().enumerate() {
            let mut sets: Vec<u8> = (1u8..1 << k).filter(|m| m.count_ones() as usize == size_minus_one + 1).collect();
            sets.shuffle(&mut rng);
            deck.extend(&sets[..count]);
        }
        deck.shuffle(&mut rng);
        let mut hints = [HintCard::face_down(0); MAX_HINTS];
        for (slot, &colours) in hints.iter_mut().zip(&deck) {
            *slot = HintCard::face_down(colours);
        }

        let max_complete = board.complete_colours(k) as u8;
        Ok(Self {
            config,
            seed,
            board,
            hints,
            phase: TurnPhase::start_of_turn(0),
            peek_history: [0; MAX_PLAYERS],
            team_peeked: [0; MAX_CARDS],
            max_complete,
            step_count: 0,
        })
    }

    /// Assemble a state from explicit parts, checking every structural invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        config: GameConfig,
        board: BoardState,
        hints: &[HintCard],
        current_player: usize,
        substep: Substep,
        peeked_this_turn: &[usize],
        peek_history: &[u16],
        step_count: u32,
    ) -> Result<Self> {
        config.validate()?;
        let invalid = |msg: String| Err(Error::Scenario(msg));
        if board.num_cards() != config.num_cards() || board.side() != config.grid_side() {
            return invalid("board does not match the configuration".into());
        }
        if hints.len() != config.num_hints() {
            return invalid(format!("{} hints given, config has {}", hints.len(), config.num_hints()));
        }
        if current_player >= config.num_players || peek_history.len() != config.num_players {
            return invalid("player index or peek history out of range".into());
        }
        let expected_peeks = match substep {
            Substep::Peek1 => 0,
            Substep::Peek2 => 1,
            Substep::Move | Substep::Hint => 2,
        };
        if peeked_this_turn.len() != expected_peeks
            || (expected_peeks == 2 && peeked_this_turn[0] == peeked_this_turn[1])
            || peeked_this_turn.iter().any(|&c| c >= config.num_cards())
        {
            return invalid(format!("{substep:?} requires {expected_peeks} distinct peeks this turn"));
        }
        let mut board = board;
        let mut slots = [HintCard::face_down(0); MAX_HINTS];
        for (h, hint) in hints.iter().enumerate() {
            if hint.colours == 0 || hint.colours >> config.num_colours() != 0 {
                return invalid(format!("hint {h} has an invalid colour set"));
            }
            match (hint.status, hint.placed_on) {
                (HintStatus::Placed, Some(card)) if card < config.num_cards() => {
                    if board.is_locked(card) {
                        return invalid(format!("two hints placed on card {card}"));
                    }
                    board.lock(card);
                }
                (HintStatus::Placed, _) => return invalid(format!("placed hint {h} needs a card")),
                (_, None) => {}
                (_, Some(_)) => return invalid(format!("hint {h} is not placed but has a card")),
            }
            slots[h] = *hint;
        }
        if peeked_this_turn.iter().any(|&c| board.is_locked(c)) {
            return invalid("a locked card cannot have been peeked this turn".into());
        }
        if !board.all_connected() {
            return invalid("cards are not connected".into());
        }

        let mut phase = TurnPhase::start_of_turn(current_player);
        phase.substep = substep;
        for &c in peeked_this_turn {
            phase.peeked[phase.num_peeked as usize] = c as u8;
            phase.num_peeked += 1;
        }
        let mut history = [0u16; MAX_PLAYERS];
        let mut team = [0u8; MAX_CARDS];
        for (agent, &mask) in peek_history.iter().enumerate() {
            let mask = if agent == current_player { mask | phase.peeked_mask() } else { mask };
            if mask & !board.all_cards() != 0 {
                return invalid(format!("peek history of agent {agent} names missing cards"));
            }
            history[agent] = mask;
            for card in bits(mask) {
                team[card] |= 1 << agent;
            }
        }
        let max_complete = board.complete_colours(config.num_colours()) as u8;
        let state = Self {
            config,
            seed: 0,
            board,
            hints: slots,
            phase,
            peek_history: history,
            team_peeked: team,
            max_complete,
            step_count,
        };
        if state.hints().iter().all(|h| h.status == HintStatus::Placed) {
            return invalid("every hint is placed, so the game would already be over".into());
        }
        Ok(state)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn board(&self) -> &BoardState {
        &self.board
    }

    pub fn hints(&self) -> &[HintCard] {
        &self.hints[..self.config.num_hints()]
    }

    pub fn phase(&self) -> &TurnPhase {
        &self.phase
    }

    pub fn current_player(&self) -> usize {
        self.phase.current_player
    }

    pub fn substep(&self) -> Substep {
        self.phase.substep
    }

    pub fn is_terminal(&self) -> bool {
        self.phase.terminal
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.phase.outcome
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    /// Cards `agent` has peeked at any point this episode.
    pub fn peek_history(&self, agent: usize) -> u16 {
        self.peek_history[agent]
    }

    pub fn has_peeked(&self, agent: usize, card: usize) -> bool {
        self.peek_history[agent] >> card & 1 == 1
    }

    /// Bitmask over agents that have peeked `card`.
    pub fn team_peeked(&self, card: usize) -> u8 {
        self.team_peeked[card]
    }

    pub fn team_peeked_all(&self) -> &[u8] {
        &self.team_peeked[..self.config.num_cards()]
    }

    pub fn max_complete_clusters(&self) -> usize {
        self.max_complete as usize
    }

    /// Every colour forms one connected component.
    pub fn check_win(&self) -> bool {
        (0..self.config.num_colours() as u8).all(|c| self.board.is_connected(self.board.colour_mask(c)))
    }

    pub fn complete_colour_clusters(&self) -> usize {
        self.board.complete_colours(self.config.num_colours())
    }

    pub fn score_terms(&self) -> ScoreTerms {
        let mut terms = ScoreTerms::default();
        for hint in self.hints() {
            match hint.status {
                HintStatus::FaceDown => terms.face_down += 1,
                HintStatus::Revealed => terms.not_placed += 1,
                HintStatus::Placed => {
                    let card = hint.placed_on.expect("placed hints record their card");
                    if hint.allows(self.board.colour(card)) {
                        terms.correct += 1;
                    } else {
                        terms.wrong += 1;
                    }
                }
            }
        }
        terms
    }

    pub fn wrong_hints(&self) -> usize {
        self.score_terms().wrong
    }

    /// Final score of a won game.
    pub fn compute_score(&self) -> Result<i32> {
        if !self.is_terminal() || !self.check_win() {
            return Err(Error::Contract("the score is only defined for won games"));
        }
        Ok(self.score_terms().score())
    }

    /// Cells `card` may move to right now.
    pub fn legal_move_targets(&self, card: usize) -> Result<Vec<Cell>> {
        if self.is_terminal() {
            return Err(Error::GameOver);
        }
        if card >= self.config.num_cards() {
            return Err(Error::NoSuchCard(card));
        }
        if self.board.is_locked(card) {
            return Err(Error::LockedCard(card));
        }
        Ok(self.board.legal_targets(card).cells(self.config.grid_side()).collect())
    }

    /// Whether any unlocked card has at least one legal target.
    pub fn any_move_available(&self) -> bool {
        bits(self.board.unlocked_mask()).any(|c| !self.board.legal_targets(c).is_empty())
    }

    /// Apply one action per agent. Only the current player may act; every
    /// other agent must submit `NoOp`.
    pub fn apply_action(&mut self, joint: &[Action]) -> Result<EventList> {
        if joint.len() != self.config.num_players {
            return Err(Error::JointArity { got: joint.len(), expected: self.config.num_players });
        }
        let current = self.current_player();
        for (agent, action) in joint.iter().enumerate() {
            if agent != current && *action != Action::NoOp {
                return Err(Error::InactiveAgent { agent, current });
            }
        }
        self.step(current, joint[current])
    }

    /// Functional form of [`GameState::apply_action`].
    pub fn applied(&self, joint: &[Action]) -> Result<(GameState, EventList)> {
        let mut next = self.clone();
        let events = next.apply_action(joint)?;
        Ok((next, events))
    }

    /// Apply the current player's action. On error the state is unchanged.
    pub fn step(&mut self, agent: usize, action: Action) -> Result<EventList> {
        if self.is_terminal() {
            return Err(Error::GameOver);
        }
        let current = self.current_player();
        if agent != current {
            return Err(Error::InactiveAgent { agent, current });
        }
        let mut events = EventList::new();
        let wrong_substep = || Error::WrongSubstep { action: action.to_string(), substep: self.substep() };
        match (self.substep(), action) {
            (Substep::Peek1, Action::EndGame) => {
                self.step_count += 1;
                self.finish(true, &mut events);
                return Ok(events);
            }
            (Substep::Peek1 | Substep::Peek2, Action::ObserveCard { card }) => {
                self.check_unlocked(card)?;
                if self.phase.peeked().contains(&(card as u8)) {
                    return Err(Error::RepeatedPeek(card));
                }
                self.phase.peeked[self.phase.num_peeked as usize] = card as u8;
                self.phase.num_peeked += 1;
                self.peek_history[agent] |= 1 << card;
                if self.team_peeked[card] == 0 {
                    events.push(Event::PeekedNewTeamCard { card });
                }
                self.team_peeked[card] |= 1 << agent;
                self.phase.substep =
                    if self.phase.substep == Substep::Peek1 { Substep::Peek2 } else { Substep::Move };
            }
            (Substep::Move, Action::MoveCard { card, to }) => {
                self.check_unlocked(card)?;
                let side = self.config.grid_side();
                if !to.in_grid(side) {
                    return Err(Error::OutOfGrid { row: to.row, col: to.col, side: side as u8 });
                }
                if !self.board.legal_targets(card).contains(to.index(side)) {
                    return Err(Error::IllegalTarget { card, row: to.row, col: to.col });
                }
                self.board.move_card(card, to);
                let complete = self.complete_colour_clusters() as u8;
                while self.max_complete < complete {
                    self.max_complete += 1;
                    events.push(Event::ClusterCountIncreasedBeyondMax { complete: self.max_complete as usize });
                }
                self.phase.substep = Substep::Hint;
            }
            (Substep::Move, Action::NoOp) => {
                if self.any_move_available() {
                    return Err(Error::MoveAvailable);
                }
                self.phase.substep = Substep::Hint;
            }
            (Substep::Hint, Action::RevealHint { hint }) => {
                let h = self.hint_mut(hint)?;
                if h.status != HintStatus::FaceDown {
                    return Err(Error::HintNotFaceDown(hint));
                }
                h.status = HintStatus::Revealed;
                self.end_turn(&mut events);
            }
            (Substep::Hint, Action::PlaceHint { hint, target }) => {
                let card = self.resolve_target(target)?;
                self.check_unlocked(card)?;
                let colour = self.board.colour(card);
                let h = self.hint_mut(hint)?;
                if h.status != HintStatus::Revealed {
                    return Err(Error::HintNotRevealed(hint));
                }
                h.status = HintStatus::Placed;
                h.placed_on = Some(card);
                let correct = h.allows(colour);
                self.board.lock(card);
                events.push(if correct {
                    Event::HintPlacedCorrect { hint, card }
                } else {
                    Event::HintPlacedWrong { hint, card }
                });
                self.end_turn(&mut events);
            }
            (_, Action::NoOp) => return Err(Error::MissingAction(agent)),
            _ => return Err(wrong_substep()),
        }
        self.step_count += 1;
        Ok(events)
    }

    fn check_unlocked(&self, card: usize) -> Result<()> {
        if card >= self.config.num_cards() {
            return Err(Error::NoSuchCard(card));
        }
        if self.board.is_locked(card) {
            return Err(Error::LockedCard(card));
        }
        Ok(())
    }

    fn hint_mut(&mut self, hint: usize) -> Result<&mut HintCard> {
        if hint >= self.config.num_hints() {
            return Err(Error::NoSuchHint(hint));
        }
        Ok(&mut self.hints[hint])
    }

    fn resolve_target(&self, target: HintTarget) -> Result<usize> {
        match (self.config.hint_target_indexing, target) {
            (HintTargetIndexing::Cell, HintTarget::Cell(cell)) => {
                let side = self.config.grid_side();
                if !cell.in_grid(side) {
                    return Err(Error::OutOfGrid { row: cell.row, col: cell.col, side: side as u8 });
                }
                self.board.card_at(cell).ok_or(Error::EmptyCell { row: cell.row, col: cell.col })
            }
            (HintTargetIndexing::Card, HintTarget::Card(card)) => Ok(card),
            _ => Err(Error::MalformedAction("hint target does not match the configured indexing".into())),
        }
    }

    fn end_turn(&mut self, events: &mut EventList) {
        if self.hints().iter().all(|h| h.status == HintStatus::Placed) {
            self.finish(false, events);
        } else {
            let next = (self.current_player() + 1) % self.config.num_players;
            self.phase = TurnPhase::start_of_turn(next);
        }
    }

    fn finish(&mut self, early: bool, events: &mut EventList) {
        let won = self.check_win();
        self.phase.terminal = true;
        self.phase.ended_early = early;
        let score = won.then(|| self.score_terms().score());
        self.phase.outcome = Some(Outcome { won, ended_early: early, score });
        events.push(Event::GameEnded { early, won });
    }

    /// Check every structural invariant; used by tests and scenario loading.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let board = &self.board;
        if board.adjacency() != &board.recompute_adjacency()[..board.num_cards()] {
            return Err("stored adjacency differs from positions".into());
        }
        for (i, row) in board.adjacency().iter().enumerate() {
            if row >> i & 1 == 1 {
                return Err(format!("self loop on card {i}"));
            }
            for j in bits(*row) {
                if !board.adjacent(j, i) {
                    return Err(format!("asymmetric edge {i}-{j}"));
                }
            }
        }
        if !board.all_connected() {
            return Err("cards are disconnected".into());
        }
        let mut locked = 0u16;
        for hint in self.hints() {
            match (hint.status, hint.placed_on) {
                (HintStatus::Placed, Some(card)) => locked |= 1 << card,
                (HintStatus::Placed, None) => return Err("placed hint without a card".into()),
                (_, Some(_)) => return Err("unplaced hint with a card".into()),
                _ => {}
            }
        }
        if locked != board.locked_mask() {
            return Err("locked flags disagree with placed hints".into());
        }
        let expected = match self.substep() {
            Substep::Peek1 => 0,
            Substep::Peek2 => 1,
            Substep::Move | Substep::Hint => 2,
        };
        if !self.is_terminal() && self.phase.peeked().len() != expected {
            return Err("peeks this turn do not match the substep".into());
        }
        if self.step_count as usize > self.config.max_episode_length() {
            return Err("episode exceeded its length bound".into());
        }
        if self.is_terminal() != self.phase.outcome.is_some() {
            return Err("terminal flag and outcome disagree".into());
        }
        Ok(())
    }
}
