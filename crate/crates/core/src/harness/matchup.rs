//! Seeded episodes between one policy per seat.

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use super::record::EpisodeRecord;
use crate::action::{legal_mask, ActionLayout};
use crate::agents::{Decision, Policy};
use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::game::GameState;
use crate::observation::SeatView;
use crate::rng::{derive_seed, rng_from, stream};
use crate::symmetry::{sample_symmetries, transform_action_to_env, transform_state, Symmetry, SymmetryMode};
use crate::vec_env::EpisodeSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchupConfig {
    pub game: GameConfig,
    pub episodes: usize,
    pub seed: u64,
    pub symmetry: SymmetryMode,
    /// Keep an [`EpisodeRecord`] of every finished episode.
    pub record: bool,
}

impl MatchupConfig {
    pub fn new(game: GameConfig, episodes: usize, seed: u64) -> Self {
        Self { game, episodes, seed, symmetry: SymmetryMode::None, record: false }
    }
}

/// An episode abandoned because a policy failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub episode: u64,
    pub step: u32,
    pub seat: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupResult {
    pub policies: Vec<String>,
    pub metrics: Metrics,
    pub summaries: Vec<EpisodeSummary>,
    pub aborted: Vec<AbortRecord>,
    pub records: Vec<EpisodeRecord>,
}

pub fn episode_deal_seed(seed: u64, episode: u64) -> u64 {
    derive_seed(seed, &[stream::DEAL, episode])
}

/// Play one episode. Each seat acts in its own symmetry frame.
pub fn play_episode(
    seats: &mut [Box<dyn Policy>],
    config: &GameConfig,
    seed: u64,
    episode: u64,
    mode: SymmetryMode,
    record: bool,
) -> std::result::Result<(EpisodeSummary, Option<EpisodeRecord>), AbortRecord> {
    let abort = |step: u32, seat: usize, e: Error| AbortRecord { episode, step, seat, reason: e.to_string() };
    let mut state = GameState::new(*config, episode_deal_seed(seed, episode)).map_err(|e| abort(0, 0, e))?;
    let symmetries = sample_symmetries(config, mode, derive_seed(seed, &[stream::SYMMETRY, episode]));
    let names: Vec<String> = seats.iter().map(|p| p.name()).collect();
    let mut rec = record.then(|| EpisodeRecord::start(&state, episode, mode, symmetries.clone(), names));
    let mut rngs: Vec<_> =
        (0..seats.len()).map(|s| rng_from(derive_seed(seed, &[stream::POLICY, episode, s as u64]))).collect();
    for (s, policy) in seats.iter_mut().enumerate() {
        policy.reset(episode).map_err(|e| abort(0, s, e))?;
    }
    let layout = ActionLayout::new(config);
    while !state.is_terminal() {
        let seat = state.current_player();
        let step = state.step_count();
        let sym = &symmetries[seat];
        let index = decide(seats[seat].as_mut(), &state, sym, &layout, episode, &mut rngs[seat])
            .map_err(|e| abort(step, seat, e))?;
        let action = transform_action_to_env(layout.decode(index).map_err(|e| abort(step, seat, e))?, sym, layout.grid_side);
        let env_index = layout.encode(&action).map_err(|e| abort(step, seat, e))?;
        let before = rec.as_ref().map(|_| state.clone());
        let events = state.step(seat, action).map_err(|e| abort(step, seat, e))?;
        if let (Some(r), Some(before)) = (rec.as_mut(), before) {
            r.push(&before, env_index, events, &state);
        }
    }
    Ok((EpisodeSummary::of(&state).expect("terminal"), rec))
}

/// Ask `policy` for its action in its own frame and check it against the mask.
pub fn decide(
    policy: &mut dyn Policy,
    state: &GameState,
    sym: &Symmetry,
    layout: &ActionLayout,
    episode: u64,
    rng: &mut crate::rng::Rng,
) -> Result<usize> {
    let seat = state.current_player();
    let framed;
    let frame = if sym.is_identity() {
        state
    } else {
        framed = transform_state(state, sym);
        &framed
    };
    let view = SeatView::new(frame, seat, policy.memory_mode());
    let mask = legal_mask(frame, seat);
    let observation = policy.encoding().map(|e| view.encode(e));
    let decision = Decision {
        view: &view,
        mask: &mask,
        layout,
        observation: observation.as_ref(),
        episode,
        step: state.step_count(),
    };
    let out = policy.act(&decision, rng)?;
    if out.action >= mask.len() || !mask.is_set(out.action) {
        return Err(Error::Protocol(format!("{} chose illegal action {}", policy.name(), out.action)));
    }
    Ok(out.action)
}

/// Run `setup.episodes` seeded episodes. Episode `e` is dealt from the same
/// seed whatever policies sit at the table.
pub fn run_matchup(seats: &mut [Box<dyn Policy>], setup: &MatchupConfig) -> Result<MatchupResult> {
    if seats.len() != setup.game.num_players {
        return Err(Error::JointArity { got: seats.len(), expected: setup.game.num_players });
    }
    let policies = seats.iter().map(|p| p.name()).collect();
    let mut summaries = Vec::with_capacity(setup.episodes);
    let mut aborted = Vec::new();
    let mut records = Vec::new();
    for e in 0..setup.episodes as u64 {
        match play_episode(seats, &setup.game, setup.seed, e, setup.symmetry, setup.record) {
            Ok((summary, record)) => {
                summaries.push(summary);
                records.extend(record);
            }
            Err(a) => aborted.push(a),
        }
    }
    Ok(MatchupResult {
        policies,
        metrics: Metrics::from_summaries(&summaries, aborted.len()),
        summaries,
        aborted,
        records,
    })
}
