mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use yle_core::action::{legal_actions, ActionLayout};
use yle_core::observation::{observe, world_state};
use yle_core::{Action, BoardState, Encoding, GameConfig, GameState, HintStatus, MemoryMode, Observation, Substep, Variant};

fn playout(config: GameConfig, seed: u64) -> (GameState, Vec<Action>) {
    let start = GameState::new(config, seed).unwrap();
    let layout = ActionLayout::new(&config);
    let mut r = rng(seed ^ 0xabc);
    let mut s = start.clone();
    let mut actions = Vec::new();
    while !s.is_terminal() {
        let a = s.current_player();
        let legal: Vec<usize> = legal_actions(&s, a).into_iter().filter(|&i| i != ActionLayout::END_GAME).collect();
        let action = layout.decode(legal[r.random_range(0..legal.len())]).unwrap();
        s.step(a, action).unwrap();
        actions.push(action);
    }
    (start, actions)
}

fn observation_stream(start: &GameState, actions: &[Action], agent: usize, mode: MemoryMode, encoding: Encoding) -> Vec<Observation> {
    let mut s = start.clone();
    let mut out = vec![observe(&s, agent, mode, encoding)];
    for &a in actions {
        s.step(s.current_player(), a).unwrap();
        out.push(observe(&s, agent, mode, encoding));
    }
    out
}

fn final_state(start: &GameState, actions: &[Action]) -> GameState {
    let mut s = start.clone();
    for &a in actions {
        s.step(s.current_player(), a).unwrap();
    }
    s
}

/// Shuffle the colours of cards `agent` never peeks and no hint covers.
fn counterfactual(start: &GameState, end: &GameState, agent: usize, r: &mut impl Rng) -> Option<GameState> {
    let hinted: Vec<usize> = end.hints().iter().filter_map(|h| h.placed_on).collect();
    let free: Vec<usize> =
        (0..start.config().num_cards()).filter(|&c| !end.has_peeked(agent, c) && !hinted.contains(&c)).collect();
    let mut colours = start.board().colours().to_vec();
    let mut pool: Vec<u8> = free.iter().map(|&c| colours[c]).collect();
    pool.shuffle(r);
    for (&c, &k) in free.iter().zip(&pool) {
        colours[c] = k;
    }
    if colours == start.board().colours() {
        return None;
    }
    let board = BoardState::from_layout(start.config().grid_side(), start.board().positions(), &colours).unwrap();
    let players = start.config().num_players;
    Some(GameState::from_parts(*start.config(), board, start.hints(), 0, Substep::Peek1, &[], &vec![0; players], 0).unwrap())
}

#[test]
fn unseen_recolourings_leave_observations_unchanged() {
    let mut trials = 0;
    let mut r = rng(1);
    for seed in 0..400u64 {
        let config = if seed % 2 == 0 { GameConfig::two_player_3x3() } else { GameConfig::new(Variant::FourByFour, 3).unwrap() };
        let (start, actions) = playout(config, seed);
        let end = final_state(&start, &actions);
        let agent = seed as usize % config.num_players;
        let Some(other) = counterfactual(&start, &end, agent, &mut r) else { continue };
        for mode in [MemoryMode::Standard, MemoryMode::Perfect] {
            for encoding in [Encoding::Graph, Encoding::Image] {
                assert_eq!(
                    observation_stream(&start, &actions, agent, mode, encoding),
                    observation_stream(&other, &actions, agent, mode, encoding)
                );
            }
        }
        trials += 1;
    }
    assert!(trials >= 100, "only {trials} trials had a non-trivial recolouring");
}

#[test]
fn peeks_are_private() {
    let mut s = GameState::new(GameConfig::two_player_3x3(), 3).unwrap();
    let k = 3;
    let fresh = observe(&s, 0, MemoryMode::Standard, Encoding::Graph);
    let Observation::Graph(g) = &fresh else { panic!() };
    assert!((0..13).all(|n| g.node(n)[..k].iter().all(|&x| x == 0.0)));
    s.step(0, Action::ObserveCard { card: 3 }).unwrap();
    let colour = s.board().colour(3) as usize;
    let Observation::Graph(mine) = observe(&s, 0, MemoryMode::Standard, Encoding::Graph) else { panic!() };
    let Observation::Graph(theirs) = observe(&s, 1, MemoryMode::Standard, Encoding::Graph) else { panic!() };
    assert_eq!(mine.node(3)[colour], 1.0);
    assert!(theirs.node(3)[..k].iter().all(|&x| x == 0.0));
    assert!((theirs.node(3)[k + 3] - 1.0 / 3.0).abs() < 1e-6);
    assert!((mine.node(3)[k + 3] - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn standard_colours_vanish_after_the_turn() {
    let mut s = GameState::new(GameConfig::two_player_3x3(), 8).unwrap();
    s.step(0, Action::ObserveCard { card: 0 }).unwrap();
    s.step(0, Action::ObserveCard { card: 1 }).unwrap();
    let view = yle_core::SeatView::new(&s, 0, MemoryMode::Standard);
    assert!(view.cards[0].colour.is_some() && view.cards[1].colour.is_some());
    let layout = ActionLayout::new(s.config());
    while s.current_player() == 0 {
        let first = legal_actions(&s, 0)[0];
        s.step(0, layout.decode(first).unwrap()).unwrap();
    }
    let view = yle_core::SeatView::new(&s, 0, MemoryMode::Standard);
    assert!(view.cards.iter().all(|c| c.colour.is_none()));
    let perfect = yle_core::SeatView::new(&s, 0, MemoryMode::Perfect);
    assert_eq!(perfect.visible_colours().iter().filter(|c| c.is_some()).count(), 2);
}

#[test]
fn perfect_memory_shows_exactly_the_peek_log() {
    for seed in 0..30 {
        let (start, actions) = playout(GameConfig::two_player_3x3(), seed);
        let mut s = start;
        let mut previous = 0;
        for a in actions {
            s.step(s.current_player(), a).unwrap();
            for agent in 0..2 {
                let Observation::Graph(g) = observe(&s, agent, MemoryMode::Perfect, Encoding::Graph) else { panic!() };
                let mut visible = 0;
                for card in 0..9 {
                    let lit = g.node(card)[..3].iter().filter(|&&x| x == 1.0).count();
                    assert_eq!(lit == 1, s.has_peeked(agent, card));
                    if lit == 1 {
                        assert_eq!(g.node(card)[s.board().colour(card) as usize], 1.0);
                        visible |= 1 << card;
                    }
                }
                if agent == 0 {
                    assert_eq!(visible & previous, previous, "perfect memory never forgets");
                    previous = visible;
                }
            }
        }
    }
}

type Tuple = ((u32, u32), Vec<u32>, u32, u32);

fn key(x: f32) -> u32 {
    (x * 3000.0).round() as u32
}

#[test]
fn graph_and_image_carry_the_same_card_facts() {
    for config in [GameConfig::two_player_3x3(), GameConfig::new(Variant::FourByFour, 4).unwrap()] {
        let k = config.num_colours();
        let g = config.grid_side();
        for state in reachable_states(config, 6, 120) {
            for agent in 0..config.num_players {
                let Observation::Graph(graph) = observe(&state, agent, MemoryMode::Perfect, Encoding::Graph) else { panic!() };
                let Observation::Image(image) = observe(&state, agent, MemoryMode::Perfect, Encoding::Image) else { panic!() };
                let mut from_graph: Vec<Tuple> = (0..config.num_cards())
                    .map(|c| {
                        let n = graph.node(c);
                        ((key(n[k]), key(n[k + 1])), n[..k].iter().map(|&x| key(x)).collect(), key(n[k + 2]), key(n[k + 3]))
                    })
                    .collect();
                let mut from_image: Vec<Tuple> = Vec::new();
                for row in 0..g {
                    for col in 0..g {
                        let px = image.pixel(row, col);
                        let occupied = state.board().card_at(yle_core::Cell::new(row as u8, col as u8)).is_some();
                        if !occupied {
                            assert!(px.iter().all(|&x| x == 0.0));
                            continue;
                        }
                        let b = 2 * k;
                        from_image.push(((key(px[b]), key(px[b + 1])), px[..k].iter().map(|&x| key(x)).collect(), key(px[b + 2]), key(px[b + 3])));
                    }
                }
                from_graph.sort();
                from_image.sort();
                assert_eq!(from_graph, from_image);
                assert_eq!(graph.adjacency.iter().map(|&x| x as u32).sum::<u32>(), 2 * state.board().edge_count() as u32);
            }
        }
    }
}

#[test]
fn shapes_and_world_state() {
    let s = GameState::new(GameConfig::two_player_3x3(), 0).unwrap();
    assert_eq!(observe(&s, 0, MemoryMode::Standard, Encoding::Image).shape(), vec![9, 10, 13]);
    assert_eq!(observe(&s, 0, MemoryMode::Standard, Encoding::Graph).shape(), vec![13, 10]);
    let w = world_state(&s, MemoryMode::Standard, Encoding::Image);
    assert_eq!(w.shape(), vec![9, 10, 26]);
    for agent in 0..2 {
        assert_eq!(w.feature_block(agent, 13), observe(&s, agent, MemoryMode::Standard, Encoding::Image));
    }
    let four = GameState::new(GameConfig::new(Variant::ThreeByThree, 4).unwrap(), 0).unwrap();
    let w = world_state(&four, MemoryMode::Standard, Encoding::Graph);
    assert_eq!(w.feature_width(), 40);
    let Observation::Graph(g) = observe(&s, 1, MemoryMode::Standard, Encoding::Graph) else { panic!() };
    for h in 9..13 {
        assert!(g.node(h)[..3].iter().all(|&x| x == 0.0));
        assert_eq!(&g.node(h)[3..5], &[-1.0, -1.0]);
    }
}

#[test]
fn revealed_hints_are_public() {
    let config = GameConfig::two_player_3x3();
    let layout = ActionLayout::new(&config);
    let mut s = GameState::new(config, 2).unwrap();
    s.step(0, Action::ObserveCard { card: 0 }).unwrap();
    s.step(0, Action::ObserveCard { card: 1 }).unwrap();
    let mv = legal_actions(&s, 0)[0];
    s.step(0, layout.decode(mv).unwrap()).unwrap();
    s.step(0, Action::RevealHint { hint: 2 }).unwrap();
    assert_eq!(s.hints()[2].status, HintStatus::Revealed);
    let colours = s.hints()[2].colours;
    for agent in 0..2 {
        let Observation::Graph(g) = observe(&s, agent, MemoryMode::Standard, Encoding::Graph) else { panic!() };
        let row = g.node(9 + 2);
        for (c, v) in row[..3].iter().enumerate() {
            assert_eq!(*v == 1.0, colours >> c & 1 == 1);
        }
    }
}
