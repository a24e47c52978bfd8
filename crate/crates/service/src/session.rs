//! One game being played through the service.
//!
//! A session is a plain state machine: every command returns the pushes it
//! produced, addressed per seat, and the server fans them out. Colours only
//! leave the session through [`SeatView`], so a seat learns exactly what
//! its observation in standard memory mode contains.

use yle_core::action::{legal_mask, ActionLayout};
use yle_core::agents::external::Handshake;
use yle_core::agents::{Policy, PolicySpec};
use yle_core::harness::matchup::decide;
use yle_core::harness::EpisodeRecord;
use yle_core::rng::{derive_seed, rng_from, stream, Rng};
use yle_core::symmetry::{sample_symmetries, Symmetry, SymmetryMode};
use yle_core::{Action, Event, GameConfig, GameState, HintTarget, HintTargetIndexing, MemoryMode, SeatView, Substep};

use crate::protocol::*;

/// Messages produced by one command, as `(seat, message)` pairs.
pub type Outbox = Vec<(usize, Push)>;

struct Seat {
    binding: SeatBinding,
    token: Option<String>,
    policy: Option<Box<dyn Policy>>,
    rng: Rng,
}

pub struct Session {
    id: String,
    config: GameConfig,
    layout: ActionLayout,
    casual_memory: bool,
    state: GameState,
    seats: Vec<Seat>,
    identity: Symmetry,
    state_version: u64,
    status: SessionStatus,
    journal: Vec<JournalEntry>,
    record: EpisodeRecord,
    record_taken: bool,
}

impl Session {
    /// Deal a new game and let scripted seats play until a human is due.
    pub fn new(
        id: String,
        config: GameConfig,
        seed: u64,
        casual_memory: bool,
        bindings: Vec<SeatBinding>,
    ) -> Result<(Self, Outbox), Rejection> {
        if bindings.len() != config.num_players {
            return Err(Rejection::new(
                RejectCode::BadRequest,
                format!("{} seat bindings for a {}-player game", bindings.len(), config.num_players),
            ));
        }
        let state = GameState::new(config, seed).map_err(|e| Rejection::engine(&e))?;
        let handshake = Handshake::new(config);
        let mut seats = Vec::with_capacity(bindings.len());
        for (seat, binding) in bindings.into_iter().enumerate() {
            let policy = match &binding {
                SeatBinding::Human => None,
                SeatBinding::Policy(spec) => Some(
                    spec.build(seat, &handshake)
                        .map_err(|e| Rejection::new(RejectCode::PolicyFailed, format!("seat {seat}: {e}")))?,
                ),
            };
            let rng = rng_from(derive_seed(seed, &[stream::POLICY, 0, seat as u64]));
            seats.push(Seat { binding, token: None, policy, rng });
        }
        let identities = sample_symmetries(&config, SymmetryMode::None, 0);
        let names = seats.iter().map(|s| s.binding.to_string()).collect();
        let record = EpisodeRecord::start(&state, 0, SymmetryMode::None, identities, names);
        let mut session = Self {
            id,
            config,
            layout: ActionLayout::new(&config),
            casual_memory,
            state,
            seats,
            identity: Symmetry::identity(config.num_colours()),
            state_version: 0,
            status: SessionStatus::Active,
            journal: Vec::new(),
            record,
            record_taken: false,
        };
        let mut outbox = Vec::new();
        session.run_scripted(&mut outbox);
        session.push_views(&mut outbox);
        Ok((session, outbox))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn status(&self) -> &SessionStatus {
        &self.status
    }

    pub fn state_version(&self) -> u64 {
        self.state_version
    }

    pub fn num_seats(&self) -> usize {
        self.seats.len()
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            version: SERVICE_VERSION.to_string(),
            session: self.id.clone(),
            config: self.config,
            casual_memory: self.casual_memory,
            seats: self
                .seats
                .iter()
                .enumerate()
                .map(|(seat, s)| SeatInfo { seat, binding: s.binding.clone(), joined: s.token.is_some() })
                .collect(),
            status: self.status.clone(),
            state_version: self.state_version,
            action_count: self.layout.count,
        }
    }

    /// Claim a human seat with `token`.
    pub fn join(&mut self, seat: usize, token: String) -> Result<SessionView, Rejection> {
        let s = self
            .seats
            .get_mut(seat)
            .ok_or_else(|| Rejection::new(RejectCode::NotFound, format!("no seat {seat}")))?;
        if s.binding != SeatBinding::Human {
            return Err(Rejection::new(RejectCode::SeatNotHuman, format!("seat {seat} is played by {}", s.binding)));
        }
        if s.token.is_some() {
            return Err(Rejection::new(RejectCode::SeatTaken, format!("seat {seat} is already taken")));
        }
        s.token = Some(token);
        Ok(self.view(seat))
    }

    /// The seat holding `token`.
    pub fn authenticate(&self, token: &str) -> Result<usize, Rejection> {
        self.seats
            .iter()
            .position(|s| s.token.as_deref() == Some(token))
            .ok_or_else(|| Rejection::new(RejectCode::Unauthorized, "unknown seat token"))
    }

    fn memory_mode(&self) -> MemoryMode {
        if self.casual_memory {
            MemoryMode::Perfect
        } else {
            MemoryMode::Standard
        }
    }

    pub fn view(&self, seat: usize) -> SessionView {
        SessionView {
            session: self.id.clone(),
            state_version: self.state_version,
            status: self.status.clone(),
            view: SeatView::new(&self.state, seat, self.memory_mode()),
            legal: self.legal_summary(seat),
            result: self.result(),
        }
    }

    fn legal_summary(&self, seat: usize) -> LegalSummary {
        let mut legal = LegalSummary::default();
        if !matches!(self.status, SessionStatus::Active) || seat != self.state.current_player() {
            return legal;
        }
        legal.acting = true;
        let board = self.state.board();
        for index in legal_mask(&self.state, seat).iter_set() {
            match self.layout.decode(index) {
                Ok(Action::EndGame) => legal.end_game = true,
                Ok(Action::NoOp) => legal.noop = true,
                Ok(Action::ObserveCard { card }) => legal.observe.push(card),
                Ok(Action::MoveCard { card, .. }) => legal.move_cards.push(card),
                Ok(Action::RevealHint { hint }) => legal.reveal.push(hint),
                Ok(Action::PlaceHint { hint, target }) => {
                    legal.place_hints.push(hint);
                    let card = match target {
                        HintTarget::Card(card) => Some(card),
                        HintTarget::Cell(cell) => board.card_at(cell),
                    };
                    legal.place_cards.extend(card);
                }
                Err(_) => {}
            }
        }
        for list in [&mut legal.move_cards, &mut legal.place_hints, &mut legal.place_cards] {
            list.sort_unstable();
            list.dedup();
        }
        legal
    }

    fn result(&self) -> Option<GameResult> {
        let outcome = self.state.outcome()?;
        Some(GameResult {
            won: outcome.won,
            ended_early: outcome.ended_early,
            score: outcome.score,
            terms: self.state.score_terms(),
            complete_clusters: self.state.complete_colour_clusters(),
            card_colours: self.state.board().colours().to_vec(),
        })
    }

    /// Legal destinations of `card` for the acting seat.
    pub fn targets(&self, seat: usize, card: usize) -> Result<TargetsResponse, Rejection> {
        self.check_turn(seat)?;
        if self.state.substep() != Substep::Move {
            return Err(Rejection::new(RejectCode::WrongSubstep, "move targets are only available at the move substep"));
        }
        let targets = self.state.legal_move_targets(card).map_err(|e| Rejection::engine(&e))?;
        Ok(TargetsResponse { card, state_version: self.state_version, targets })
    }

    fn check_turn(&self, seat: usize) -> Result<(), Rejection> {
        match &self.status {
            SessionStatus::Active => {}
            SessionStatus::Finished => return Err(Rejection::new(RejectCode::GameOver, "the game is over")),
            SessionStatus::Aborted { reason } => {
                return Err(Rejection::new(RejectCode::GameOver, format!("the session was aborted: {reason}")))
            }
        }
        let current = self.state.current_player();
        if seat != current {
            return Err(Rejection::new(RejectCode::OutOfTurn, format!("seat {current} is to act, not seat {seat}")));
        }
        Ok(())
    }

    /// Bring a card-addressed hint target into the configured indexing and back.
    fn normalise(&self, action: Action) -> Action {
        let board = self.state.board();
        match (action, self.config.hint_target_indexing) {
            (Action::PlaceHint { hint, target: HintTarget::Card(card) }, HintTargetIndexing::Cell)
                if card < board.num_cards() =>
            {
                Action::PlaceHint { hint, target: HintTarget::Cell(board.position(card)) }
            }
            (Action::PlaceHint { hint, target: HintTarget::Cell(cell) }, HintTargetIndexing::Card) => {
                match board.card_at(cell) {
                    Some(card) => Action::PlaceHint { hint, target: HintTarget::Card(card) },
                    None => action,
                }
            }
            _ => action,
        }
    }

    /// Validate and apply a human action, then let scripted seats move.
    pub fn submit(&mut self, seat: usize, request: SubmitRequest) -> Result<(SubmitResponse, Outbox), Rejection> {
        self.check_turn(seat)?;
        if self.seats[seat].binding != SeatBinding::Human {
            return Err(Rejection::new(RejectCode::SeatNotHuman, format!("seat {seat} is scripted")));
        }
        if request.state_version != self.state_version {
            return Err(Rejection::new(
                RejectCode::StaleVersion,
                format!("action chosen at version {}, state is at version {}", request.state_version, self.state_version),
            ));
        }
        let action = match request.action {
            ActionRef::Structured { action } => self.normalise(action),
            ActionRef::Index { action_index } => {
                self.layout.decode(action_index).map_err(|e| Rejection::new(RejectCode::IllegalAction, e.to_string()))?
            }
        };
        let index = self.layout.encode(&action).map_err(|e| Rejection::engine(&e))?;
        let mut outbox = Vec::new();
        self.apply(seat, action, index, true, &mut outbox).map_err(|e| Rejection::engine(&e))?;
        self.run_scripted(&mut outbox);
        self.push_views(&mut outbox);
        Ok((SubmitResponse { action_index: index, action, view: self.view(seat) }, outbox))
    }

    fn apply(&mut self, seat: usize, action: Action, index: usize, by_human: bool, outbox: &mut Outbox) -> yle_core::Result<()> {
        let before = self.state.clone();
        let events = self.state.step(seat, action)?;
        self.state_version += 1;
        self.journal.push(JournalEntry {
            step: before.step_count(),
            seat,
            substep: before.substep(),
            action_index: index,
            action,
            by_human,
        });
        self.record.push(&before, index, events.clone(), &self.state);
        let everyone = 0..self.seats.len();
        match action {
            Action::ObserveCard { card } => {
                let colour = self.state.board().colour(card);
                for s in everyone.clone() {
                    outbox.push((s, Push::CardInspected { seat, card, colour: (s == seat).then_some(colour) }));
                }
            }
            Action::MoveCard { card, to } => {
                everyone.clone().for_each(|s| outbox.push((s, Push::CardMoved { seat, card, to })));
            }
            Action::NoOp => everyone.clone().for_each(|s| outbox.push((s, Push::NoMove { seat }))),
            Action::RevealHint { hint } => {
                let colours = self.state.hints()[hint].colours;
                everyone.clone().for_each(|s| outbox.push((s, Push::HintRevealed { seat, hint, colours })));
            }
            Action::PlaceHint { hint, .. } => {
                // Whether the hint was right stays hidden until the game ends.
                let card = events
                    .iter()
                    .find_map(|e| match e {
                        Event::HintPlacedCorrect { card, .. } | Event::HintPlacedWrong { card, .. } => Some(*card),
                        _ => None,
                    })
                    .or(self.state.hints()[hint].placed_on)
                    .unwrap_or_default();
                everyone.clone().for_each(|s| outbox.push((s, Push::HintPlaced { seat, hint, card })));
            }
            Action::EndGame => {}
        }
        if let Some(result) = self.result() {
            self.status = SessionStatus::Finished;
            everyone.for_each(|s| outbox.push((s, Push::GameEnded { result: result.clone() })));
        } else if self.state.current_player() != seat {
            let next = self.state.current_player();
            everyone.for_each(|s| outbox.push((s, Push::TurnPassed { seat: next })));
        }
        Ok(())
    }

    /// Play scripted seats until a human is due or the game ends.
    fn run_scripted(&mut self, outbox: &mut Outbox) {
        while matches!(self.status, SessionStatus::Active) {
            let seat = self.state.current_player();
            let Some(mut policy) = self.seats[seat].policy.take() else { return };
            let mut rng = std::mem::replace(&mut self.seats[seat].rng, rng_from(0));
            let chosen = decide(policy.as_mut(), &self.state, &self.identity, &self.layout, 0, &mut rng)
                .and_then(|index| Ok((index, self.layout.decode(index)?)));
            self.seats[seat].policy = Some(policy);
            self.seats[seat].rng = rng;
            let outcome = chosen.and_then(|(index, action)| self.apply(seat, action, index, false, outbox));
            if let Err(e) = outcome {
                let reason = format!("seat {seat} ({}) failed: {e}", self.seats[seat].binding);
                self.status = SessionStatus::Aborted { reason: reason.clone() };
                (0..self.seats.len()).for_each(|s| outbox.push((s, Push::Aborted { reason: reason.clone() })));
            }
        }
    }

    fn push_views(&self, outbox: &mut Outbox) {
        for seat in 0..self.seats.len() {
            outbox.push((seat, Push::View { view: Box::new(self.view(seat)) }));
        }
    }

    pub fn journal(&self) -> Journal {
        Journal { session: self.id.clone(), entries: self.journal.clone() }
    }

    /// The episode record, once the game is over.
    pub fn record(&self) -> Result<&EpisodeRecord, Rejection> {
        match self.status {
            SessionStatus::Finished => Ok(&self.record),
            _ => Err(Rejection::new(RejectCode::GameNotOver, "the record is available once the game is over")),
        }
    }

    /// The finished record, handed out once for persistence.
    pub fn take_finished_record(&mut self) -> Option<EpisodeRecord> {
        if self.record_taken || self.status != SessionStatus::Finished {
            return None;
        }
        self.record_taken = true;
        Some(self.record.clone())
    }

    /// Policy specs that start processes or open connections.
    pub fn is_external(spec: &PolicySpec) -> bool {
        matches!(spec, PolicySpec::Command(_) | PolicySpec::Tcp(_))
    }
}
