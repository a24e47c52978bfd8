mod common;

use common::*;
use yle_core::action::{legal_mask, ActionLayout};
use yle_core::agents::{Decision, GreedyAgent, MemoryOracle, Policy, PolicyOutput, RandomAgent};
use yle_core::harness::matchup::{run_matchup, MatchupConfig};
use yle_core::rng::rng_from;
use yle_core::{Action, GameConfig, GameState, SeatView, Substep};

fn ask(policy: &mut dyn Policy, state: &GameState, seat: usize, rng: &mut yle_core::rng::Rng) -> PolicyOutput {
    let view = SeatView::new(state, seat, policy.memory_mode());
    let mask = legal_mask(state, seat);
    let layout = ActionLayout::new(state.config());
    let obs = policy.encoding().map(|e| view.encode(e));
    let d = Decision { view: &view, mask: &mask, layout: &layout, observation: obs.as_ref(), episode: 0, step: state.step_count() };
    policy.act(&d, rng).unwrap()
}

#[test]
fn random_agent_is_uniform() {
    let s = GameState::new(GameConfig::two_player_3x3(), 0).unwrap();
    let mut rng = rng_from(1);
    let out = ask(&mut RandomAgent, &s, 0, &mut rng);
    let p = out.probabilities.unwrap();
    let legal: Vec<usize> = legal_mask(&s, 0).iter_set().collect();
    assert_eq!(legal.len(), 10);
    assert!(legal.iter().all(|&i| (p[i] - 0.1).abs() < 1e-12));
    let inactive = ask(&mut RandomAgent, &s, 1, &mut rng);
    assert_eq!(inactive.action, ActionLayout::new(s.config()).noop_index);
    assert_eq!(inactive.probabilities.unwrap()[inactive.action], 1.0);

    let n = 100_000;
    let mut counts = vec![0usize; 1068];
    for _ in 0..n {
        counts[ask(&mut RandomAgent, &s, 0, &mut rng).action] += 1;
    }
    for &i in &legal {
        let f = counts[i] as f64 / n as f64;
        assert!((f - 0.1).abs() < 0.01, "{i}: {f}");
    }
}

#[test]
fn scripted_agents_are_legal_and_normalised() {
    let states = reachable_states(GameConfig::two_player_3x3(), 12, 34_000);
    let mut agents: Vec<Box<dyn Policy>> = vec![Box::new(RandomAgent), Box::new(GreedyAgent), Box::new(MemoryOracle::default())];
    let mut rng = rng_from(0);
    for agent in &mut agents {
        for s in &states {
            let seat = s.current_player();
            let out = ask(agent.as_mut(), s, seat, &mut rng);
            let mask = legal_mask(s, seat);
            assert!(mask.is_set(out.action), "{} chose an illegal action", agent.name());
            let p = out.probabilities.unwrap();
            let legal_mass: f64 = mask.iter_set().map(|i| p[i]).sum();
            assert!((legal_mass - 1.0).abs() < 1e-6);
            assert!(p.iter().enumerate().all(|(i, &x)| x == 0.0 || mask.is_set(i)));
        }
    }
}

#[test]
fn scripted_agents_are_deterministic() {
    let states = reachable_states(GameConfig::two_player_3x3(), 4, 500);
    for s in &states {
        let seat = s.current_player();
        let a = ask(&mut GreedyAgent, s, seat, &mut rng_from(1));
        let b = ask(&mut GreedyAgent, s, seat, &mut rng_from(2));
        assert_eq!(a, b);
        let a = ask(&mut RandomAgent, s, seat, &mut rng_from(3));
        let b = ask(&mut RandomAgent, s, seat, &mut rng_from(3));
        assert_eq!(a, b);
    }
}

#[test]
fn oracle_peeks_new_cards_and_remembers() {
    let config = GameConfig::two_player_3x3();
    let layout = ActionLayout::new(&config);
    let mut s = GameState::new(config, 8).unwrap();
    let mut oracle = MemoryOracle::default();
    let mut rng = rng_from(0);
    let first = layout.decode(ask(&mut oracle, &s, 0, &mut rng).action).unwrap();
    s.step(0, first).unwrap();
    let second = layout.decode(ask(&mut oracle, &s, 0, &mut rng).action).unwrap();
    let (Action::ObserveCard { card: a }, Action::ObserveCard { card: b }) = (first, second) else { panic!() };
    assert_ne!(a, b);

    let mut best = 0;
    for seed in 0..50 {
        let mut s = GameState::new(config, seed).unwrap();
        let mut seats = [MemoryOracle::default(), MemoryOracle::default()];
        let mut previous = 0;
        while !s.is_terminal() {
            let seat = s.current_player();
            let out = ask(&mut seats[seat], &s, seat, &mut rng);
            if seat == 0 {
                let known = seats[0].knowledge().iter().filter(|k| k.is_some()).count();
                assert!(known >= previous);
                previous = known;
            }
            s.step(seat, layout.decode(out.action).unwrap()).unwrap();
        }
        best = best.max((0..9).filter(|&c| s.has_peeked(0, c)).count());
    }
    assert!(best >= 8, "oracle saw at most {best} cards");
}

#[test]
fn greedy_beats_random() {
    let config = GameConfig::two_player_3x3();
    let setup = MatchupConfig::new(config, 300, 4);
    let greedy = run_matchup(&mut [Box::new(GreedyAgent) as Box<dyn Policy>, Box::new(GreedyAgent)], &setup).unwrap();
    let random = run_matchup(&mut [Box::new(RandomAgent) as Box<dyn Policy>, Box::new(RandomAgent)], &setup).unwrap();
    assert!(greedy.metrics.success_rate > random.metrics.success_rate);
    assert!(greedy.metrics.successful_early_end > 0.0);
}

#[test]
fn greedy_opens_with_lowest_unseen_card() {
    let s = GameState::new(GameConfig::two_player_3x3(), 0).unwrap();
    let layout = ActionLayout::new(s.config());
    assert_eq!(s.substep(), Substep::Peek1);
    assert_eq!(ask(&mut GreedyAgent, &s, 0, &mut rng_from(0)).action, layout.observe(0));
}
