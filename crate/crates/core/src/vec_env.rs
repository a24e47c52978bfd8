//! Many independent games stepped in lock-step, with auto-reset.
//!
//! Instance `i` deals episode `e` from `derive_seed(master_seed, [i, e])`, so
//! instances share no state and a batch is reproducible from its master seed
//! and the action stream alone.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{legal_actions_with, Action, ActionKind, ActionLayout, ActionMask};
use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::game::{EventList, GameState};
use crate::observation::{Encoding, MemoryMode, Observation, SeatView};
use crate::reward::{terminal_reward, RewardBreakdown};
use crate::rng::{derive_seed, rng_from, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VecEnvOptions {
    pub encoding: Encoding,
    pub memory_mode: MemoryMode,
    pub shaping_weight: f64,
    /// Skip building observation tensors; steps then return empty observation lists.
    pub observations: bool,
}

impl Default for VecEnvOptions {
    fn default() -> Self {
        Self { encoding: Encoding::Graph, memory_mode: MemoryMode::Standard, shaping_weight: 0.0, observations: true }
    }
}

/// Metrics of an episode that just finished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub won: bool,
    pub ended_early: bool,
    pub score: Option<i32>,
    pub complete_clusters: usize,
    pub wrong_hints: usize,
    pub length: u32,
    pub terminal_reward: f64,
}

impl EpisodeSummary {
    pub fn of(state: &GameState) -> Result<Self> {
        let outcome = state.outcome().ok_or(Error::Contract("episode summary of a running game"))?;
        Ok(Self {
            seed: state.seed(),
            won: outcome.won,
            ended_early: outcome.ended_early,
            score: outcome.score,
            complete_clusters: state.complete_colour_clusters(),
            wrong_hints: state.wrong_hints(),
            length: state.step_count(),
            terminal_reward: terminal_reward(state)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Set when the submitted joint action was rejected; the instance is unchanged.
    pub error: Option<String>,
    pub events: EventList,
    /// Present on the step that ended an episode.
    pub finished: Option<EpisodeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    /// One observation per agent. After `done` these belong to the fresh episode.
    pub observations: Vec<Observation>,
    /// Team reward, identical for every agent.
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub struct VecEnv {
    config: GameConfig,
    layout: ActionLayout,
    options: VecEnvOptions,
    master_seed: u64,
    states: Vec<GameState>,
    episode_counters: Vec<u64>,
}

impl VecEnv {
    pub fn new(config: GameConfig, num_envs: usize, master_seed: u64, options: VecEnvOptions) -> Result<Self> {
        config.validate()?;
        let states = (0..num_envs)
            .map(|i| GameState::new(config, derive_seed(master_seed, &[i as u64, 0])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            layout: ActionLayout::new(&config),
            options,
            master_seed,
            states,
            episode_counters: vec![0; num_envs],
        })
    }

    pub fn num_envs(&self) -> usize {
        self.states.len()
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn layout(&self) -> &ActionLayout {
        &self.layout
    }

    pub fn states(&self) -> &[GameState] {
        &self.states
    }

    pub fn episode_counters(&self) -> &[u64] {
        &self.episode_counters
    }

    fn observe_all(options: &VecEnvOptions, state: &GameState) -> Vec<Observation> {
        if !options.observations {
            return Vec::new();
        }
        (0..state.config().num_players)
            .map(|a| SeatView::new(state, a, options.memory_mode).encode(options.encoding))
            .collect()
    }

    /// Current observations of every instance, per agent.
    pub fn observations(&self) -> Vec<Vec<Observation>> {
        self.states.par_iter().map(|s| Self::observe_all(&self.options, s)).collect()
    }

    /// Legality masks of every agent in every instance.
    pub fn masks(&self) -> Vec<Vec<ActionMask>> {
        let layout = &self.layout;
        self.states
            .par_iter()
            .map(|s| {
                (0..s.config().num_players)
                    .map(|a| ActionMask::from_indices(layout.count, legal_actions_with(s, a, layout)))
                    .collect()
            })
            .collect()
    }

    /// Step every instance with its joint action, given as
    /// `num_envs x num_players` canonical indices in row-major order.
    pub fn step(&mut self, joint: &[usize]) -> Result<Vec<StepResult>> {
        let players = self.config.num_players;
        if joint.len() != self.states.len() * players {
            return Err(Error::JointArity { got: joint.len(), expected: self.states.len() * players });
        }
        let layout = self.layout;
        let options = self.options;
        let master = self.master_seed;
        let results = self
            .states
            .par_iter_mut()
            .zip(self.episode_counters.par_iter_mut())
            .zip(joint.par_chunks(players))
            .enumerate()
            .map(|(i, ((state, counter), actions))| {
                step_instance(state, counter, actions, &layout, &options, master, i)
            })
            .collect();
        Ok(results)
    }
}

fn step_instance(
    state: &mut GameState,
    counter: &mut u64,
    indices: &[usize],
    layout: &ActionLayout,
    options: &VecEnvOptions,
    master: u64,
    instance: usize,
) -> StepResult {
    let decoded: Result<Vec<Action>> = indices.iter().map(|&i| layout.decode(i)).collect();
    let applied = decoded.and_then(|joint| state.apply_action(&joint));
    let events = match applied {
        Ok(events) => events,
        Err(e) => {
            return StepResult {
                observations: VecEnv::observe_all(options, state),
                reward: 0.0,
                done: false,
                info: StepInfo { error: Some(e.to_string()), ..StepInfo::default() },
            };
        }
    };
    let reward = RewardBreakdown::for_step(state, &events, options.shaping_weight).total;
    let mut info = StepInfo { events, ..StepInfo::default() };
    let done = state.is_terminal();
    if done {
        info.finished = Some(EpisodeSummary::of(state).expect("state is terminal"));
        *counter += 1;
        let seed = derive_seed(master, &[instance as u64, *counter]);
        *state = GameState::new(*state.config(), seed).expect("config was validated");
    }
    StepResult { observations: VecEnv::observe_all(options, state), reward, done, info }
}

/// Uniformly random legal joint actions, one generator per instance.
pub struct RandomDriver {
    rngs: Vec<Rng>,
}

impl RandomDriver {
    pub fn new(num_envs: usize, seed: u64) -> Self {
        Self { rngs: (0..num_envs).map(|i| rng_from(derive_seed(seed, &[crate::rng::stream::POLICY, i as u64]))).collect() }
    }

    /// Fill `joint` with a legal joint action for every instance.
    pub fn act(&mut self, env: &VecEnv, joint: &mut Vec<usize>) {
        let players = env.config.num_players;
        let layout = env.layout;
        joint.clear();
        joint.resize(env.num_envs() * players, layout.noop_index);
        env.states
            .par_iter()
            .zip(self.rngs.par_iter_mut())
            .zip(joint.par_chunks_mut(players))
            .for_each(|((state, rng), row)| {
                let current = state.current_player();
                let legal = legal_actions_with(state, current, &layout);
                row[current] = legal[rng.random_range(0..legal.len())];
            });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub variant: String,
    pub players: usize,
    pub envs: usize,
    pub steps: usize,
    pub total_steps: u64,
    pub seconds: f64,
    pub sps: f64,
    pub threads: usize,
    pub observations: bool,
    pub episodes_finished: u64,
    pub action_mix: BTreeMap<ActionKind, u64>,
}

/// Run `steps` random legal joint steps across `envs` instances and time them.
pub fn throughput_bench(config: GameConfig, envs: usize, steps: usize, seed: u64, options: VecEnvOptions) -> Result<BenchReport> {
    let envs = envs.max(1);
    let mut env = VecEnv::new(config, envs, seed, options)?;
    let mut driver = RandomDriver::new(envs, seed);
    let mut joint = Vec::with_capacity(envs * config.num_players);
    let mut mix: BTreeMap<ActionKind, u64> = BTreeMap::new();
    let mut finished = 0u64;
    let noop = env.layout.noop_index;
    let start = Instant::now();
    for _ in 0..steps {
        driver.act(&env, &mut joint);
        for row in joint.chunks(config.num_players) {
            let acted = row.iter().copied().find(|&i| i != noop).unwrap_or(noop);
            *mix.entry(env.layout.decode(acted)?.kind()).or_default() += 1;
        }
        let results = env.step(&joint)?;
        for r in &results {
            if let Some(e) = &r.info.error {
                return Err(Error::Scenario(format!("random driver produced an illegal action: {e}")));
            }
            finished += u64::from(r.done);
        }
    }
    let busy = if steps == 0 { 0.0 } else { start.elapsed().as_secs_f64() };
    let total_steps = (envs * steps) as u64;
    Ok(BenchReport {
        variant: config.variant.to_string(),
        players: config.num_players,
        envs,
        steps,
        total_steps,
        seconds: busy,
        sps: if busy > 0.0 { total_steps as f64 / busy } else { 0.0 },
        threads: rayon::current_num_threads(),
        observations: options.observations,
        episodes_finished: finished,
        action_mix: mix,
    })
}

/// Aligned text table with one row per report.
pub fn bench_table(reports: &[BenchReport]) -> String {
    let mut out = format!(
        "{:<8} {:>7} {:>8} {:>7} {:>12} {:>10} {:>14}\n",
        "variant", "players", "envs", "steps", "total steps", "seconds", "SPS"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<8} {:>7} {:>8} {:>7} {:>12} {:>10.3} {:>14.0}\n",
            r.variant, r.players, r.envs, r.steps, r.total_steps, r.seconds, r.sps
        ));
    }
    if let Some(r) = reports.first() {
        let total: u64 = r.action_mix.values().sum();
        let mix: Vec<String> = r
            .action_mix
            .iter()
            .map(|(k, v)| format!("{k:?} {:.1}%", 100.0 * *v as f64 / total.max(1) as f64))
            .collect();
        out.push_str(&format!("action mix (envs={}): {}\n", r.envs, mix.join(", ")));
        out.push_str(&format!("worker threads: {}\n", r.threads));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::observe;

    #[test]
    fn single_instance_matches_direct_stepping() {
        let config = GameConfig::two_player_3x3();
        let mut env = VecEnv::new(config, 1, 9, VecEnvOptions::default()).unwrap();
        let mut state = env.states()[0].clone();
        let mut driver = RandomDriver::new(1, 4);
        let mut joint = Vec::new();
        let mut episodes = 0;
        for _ in 0..100 {
            driver.act(&env, &mut joint);
            let actions: Vec<Action> = joint.iter().map(|&i| env.layout().decode(i).unwrap()).collect();
            let events = state.apply_action(&actions).unwrap();
            let result = env.step(&joint).unwrap().remove(0);
            if result.done {
                let summary = result.info.finished.unwrap();
                assert_eq!(summary, EpisodeSummary::of(&state).unwrap());
                episodes += 1;
                assert_eq!(env.episode_counters()[0], episodes);
                assert_eq!(result.observations[0], observe(&env.states()[0], 0, MemoryMode::Standard, Encoding::Graph));
                assert_eq!(env.states()[0].step_count(), 0);
                state = env.states()[0].clone();
            } else {
                assert_eq!(result.info.events, events);
                assert_eq!(result.observations[0], observe(&state, 0, MemoryMode::Standard, Encoding::Graph));
            }
            assert_eq!(&state, &env.states()[0]);
        }
    }

    #[test]
    fn illegal_action_leaves_instance_untouched() {
        let config = GameConfig::two_player_3x3();
        let mut env = VecEnv::new(config, 2, 1, VecEnvOptions::default()).unwrap();
        let before = env.states().to_vec();
        let layout = *env.layout();
        let joint = [layout.reveal(0), layout.noop_index, layout.observe(0), layout.noop_index];
        let results = env.step(&joint).unwrap();
        assert!(results[0].info.error.is_some());
        assert_eq!(env.states()[0], before[0]);
        assert!(results[1].info.error.is_none());
        assert_ne!(env.states()[1], before[1]);
    }

    #[test]
    fn zero_steps_is_an_empty_report() {
        let r = throughput_bench(GameConfig::two_player_3x3(), 4, 0, 0, VecEnvOptions::default()).unwrap();
        assert_eq!((r.total_steps, r.sps), (0, 0.0));
        assert!(r.action_mix.is_empty());
    }
}
