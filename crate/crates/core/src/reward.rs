//! Terminal team reward and the shaped training reward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Event, GameState};

/// Shared team reward at a terminal state: the score when won, otherwise
/// `-d - (|C| - c) - w` with `d` the early-end flag, `c` the complete colours
/// and `w` the wrongly placed hints.
pub fn terminal_reward(state: &GameState) -> Result<f64> {
    let outcome = state.outcome().ok_or(Error::Contract("terminal reward of a running game"))?;
    if outcome.won {
        return Ok(state.score_terms().score() as f64);
    }
    Ok(loss_reward(
        outcome.ended_early,
        state.config().num_colours(),
        state.complete_colour_clusters(),
        state.wrong_hints(),
    ))
}

pub fn loss_reward(ended_early: bool, num_colours: usize, complete: usize, wrong_hints: usize) -> f64 {
    -(f64::from(u8::from(ended_early))) - (num_colours - complete) as f64 - wrong_hints as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapingCounts {
    pub new_card_peek: usize,
    pub cluster_max_increase: usize,
    pub hint_correct: usize,
    pub hint_wrong: usize,
}

impl ShapingCounts {
    pub fn from_events(events: &[Event]) -> Self {
        let mut counts = Self::default();
        counts.add(events);
        counts
    }

    pub fn add(&mut self, events: &[Event]) {
        for event in events {
            match event {
                Event::PeekedNewTeamCard { .. } => self.new_card_peek += 1,
                Event::ClusterCountIncreasedBeyondMax { .. } => self.cluster_max_increase += 1,
                Event::HintPlacedCorrect { .. } => self.hint_correct += 1,
                Event::HintPlacedWrong { .. } => self.hint_wrong += 1,
                Event::GameEnded { .. } => {}
            }
        }
    }

    pub fn net(&self) -> f64 {
        (self.new_card_peek + self.cluster_max_increase + self.hint_correct) as f64 - self.hint_wrong as f64
    }
}

pub fn shaped_step_reward(events: &[Event], shaping_weight: f64) -> f64 {
    shaping_weight * ShapingCounts::from_events(events).net()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub terminal: f64,
    pub shaped: ShapingCounts,
    pub shaping_weight: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Reward for one transition. `terminal` is only non-zero when the
    /// transition ended the game.
    pub fn for_step(state_after: &GameState, events: &[Event], shaping_weight: f64) -> Self {
        let terminal = if state_after.is_terminal() {
            terminal_reward(state_after).expect("state is terminal")
        } else {
            0.0
        };
        let shaped = ShapingCounts::from_events(events);
        Self { terminal, shaped, shaping_weight, total: terminal + shaping_weight * shaped.net() }
    }
}
