//! Replayable episode records.
//!
//! Card colours never change during an episode, so they are stored once per
//! record. Everything else that varies is stored per step and checked again
//! on replay.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::{Action, ActionLayout};
use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::game::{EventList, GameState, Substep};
use crate::reward::terminal_reward;
use crate::symmetry::{Symmetry, SymmetryMode};
use crate::vec_env::EpisodeSummary;

pub const EPISODE_SCHEMA: &str = "yle-episode/1";

/// Hex SHA-256 of the configuration's canonical JSON.
pub fn config_digest(config: &GameConfig) -> String {
    let json = serde_json::to_vec(config).expect("configs serialise");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-card labels of what `agent` has seen: the colour for every card it has
/// peeked, `None` for the rest.
pub fn knowledge_labels(state: &GameState, agent: usize) -> Vec<Option<u8>> {
    (0..state.config().num_cards())
        .map(|c| state.has_peeked(agent, c).then(|| state.board().colour(c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub agent: usize,
    pub substep: Substep,
    /// Canonical index in the true frame.
    pub action: usize,
    pub events: EventList,
    /// Unshaped team reward of this transition.
    pub reward: f64,
    /// Per card, bitmask of the agents that have peeked it after this step.
    pub team_peeked: Vec<u8>,
    /// Per agent, per-card knowledge labels after this step.
    pub knowledge: Vec<Vec<Option<u8>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema: String,
    pub config: GameConfig,
    pub config_digest: String,
    pub episode: u64,
    pub deal_seed: u64,
    pub symmetry_mode: SymmetryMode,
    pub symmetries: Vec<Symmetry>,
    pub policies: Vec<String>,
    pub card_colours: Vec<u8>,
    pub hint_colours: Vec<u8>,
    pub steps: Vec<StepRecord>,
    pub terminal: Option<EpisodeSummary>,
}

impl EpisodeRecord {
    pub fn start(state: &GameState, episode: u64, mode: SymmetryMode, symmetries: Vec<Symmetry>, policies: Vec<String>) -> Self {
        Self {
            schema: EPISODE_SCHEMA.to_string(),
            config: *state.config(),
            config_digest: config_digest(state.config()),
            episode,
            deal_seed: state.seed(),
            symmetry_mode: mode,
            symmetries,
            policies,
            card_colours: state.board().colours().to_vec(),
            hint_colours: state.hints().iter().map(|h| h.colours).collect(),
            steps: Vec::new(),
            terminal: None,
        }
    }

    /// Append the transition that led to `after`.
    pub fn push(&mut self, before: &GameState, action: usize, events: EventList, after: &GameState) {
        let reward = if after.is_terminal() { terminal_reward(after).expect("terminal") } else { 0.0 };
        self.steps.push(StepRecord {
            step: before.step_count(),
            agent: before.current_player(),
            substep: before.substep(),
            action,
            events,
            reward,
            team_peeked: after.team_peeked_all().to_vec(),
            knowledge: (0..after.config().num_players).map(|a| knowledge_labels(after, a)).collect(),
        });
        if after.is_terminal() {
            self.terminal = Some(EpisodeSummary::of(after).expect("terminal"));
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialise")
    }

    /// States before each recorded step, followed by the final state.
    pub fn replay_states(&self) -> Result<Vec<GameState>> {
        let mismatch = |what: String| Err(Error::Replay(what));
        if self.schema != EPISODE_SCHEMA {
            return mismatch(format!("unknown schema {:?}", self.schema));
        }
        if self.config_digest != config_digest(&self.config) {
            return mismatch("configuration digest does not match".into());
        }
        let mut state = GameState::new(self.config, self.deal_seed)?;
        if state.board().colours() != self.card_colours.as_slice() {
            return mismatch("dealt card colours differ".into());
        }
        let hints: Vec<u8> = state.hints().iter().map(|h| h.colours).collect();
        if hints != self.hint_colours {
            return mismatch("dealt hint colours differ".into());
        }
        let layout = ActionLayout::new(&self.config);
        let mut states = vec![state.clone()];
        for rec in &self.steps {
            if rec.step != state.step_count() || rec.agent != state.current_player() || rec.substep != state.substep() {
                return mismatch(format!("step {} is out of phase", rec.step));
            }
            let action: Action = layout.decode(rec.action)?;
            let events = state.step(rec.agent, action)?;
            if events != rec.events {
                return mismatch(format!("events differ at step {}", rec.step));
            }
            let reward = if state.is_terminal() { terminal_reward(&state)? } else { 0.0 };
            if reward != rec.reward {
                return mismatch(format!("reward differs at step {}", rec.step));
            }
            if state.team_peeked_all() != rec.team_peeked.as_slice() {
                return mismatch(format!("team peeks differ at step {}", rec.step));
            }
            let knowledge: Vec<Vec<Option<u8>>> =
                (0..self.config.num_players).map(|a| knowledge_labels(&state, a)).collect();
            if knowledge != rec.knowledge {
                return mismatch(format!("knowledge labels differ at step {}", rec.step));
            }
            states.push(state.clone());
        }
        let terminal = if state.is_terminal() { Some(EpisodeSummary::of(&state)?) } else { None };
        if terminal != self.terminal {
            return mismatch("terminal metrics differ".into());
        }
        Ok(states)
    }

    /// Re-simulate from the seeds and check every recorded field.
    pub fn verify(&self) -> Result<()> {
        self.replay_states().map(|_| ())
    }
}

pub fn read_records(text: &str) -> Result<Vec<EpisodeRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::legal_actions;
    use rand::Rng;

    fn random_record(seed: u64) -> EpisodeRecord {
        let config = GameConfig::two_player_3x3();
        let mut state = GameState::new(config, seed).unwrap();
        let layout = ActionLayout::new(&config);
        let mut record = EpisodeRecord::start(&state, 0, SymmetryMode::None, vec![Symmetry::identity(3); 2], vec!["random".into(); 2]);
        let mut rng = crate::rng::rng_from(seed);
        while !state.is_terminal() {
            let legal = legal_actions(&state, state.current_player());
            let index = legal[rng.random_range(0..legal.len())];
            let before = state.clone();
            let events = state.step(state.current_player(), layout.decode(index).unwrap()).unwrap();
            record.push(&before, index, events, &state);
        }
        record
    }

    #[test]
    fn replay_reproduces_record() {
        let record = random_record(5);
        assert!(record.terminal.is_some());
        record.verify().unwrap();
        let parsed = read_records(&record.to_json_line()).unwrap();
        assert_eq!(parsed, vec![record.clone()]);

        let mut tampered = record.clone();
        tampered.steps[0].reward = 1.0;
        assert!(matches!(tampered.verify(), Err(Error::Replay(_))));
        let mut tampered = record;
        tampered.card_colours.swap(0, 8);
        if tampered.card_colours != random_record(5).card_colours {
            assert!(tampered.verify().is_err());
        }
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = config_digest(&GameConfig::two_player_3x3());
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_digest(&GameConfig::two_player_3x3()));
        let b = config_digest(&GameConfig::two_player_3x3().with_hint_indexing(crate::HintTargetIndexing::Card));
        assert_ne!(a, b);
    }
}
