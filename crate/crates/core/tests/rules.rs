mod common;

use common::*;
use proptest::prelude::*;
use yle_core::action::{legal_actions, ActionLayout};
use yle_core::game::ScoreTerms;
use yle_core::reward::{loss_reward, terminal_reward};
use yle_core::{Action, BoardState, Cell, Event, GameConfig, GameState, HintCard, HintStatus, HintTarget, Substep, Variant};

fn sorted(mut cells: Vec<Cell>) -> Vec<Cell> {
    cells.sort();
    cells
}

#[test]
fn legal_targets_match_flood_fill_on_reachable_states() {
    for config in [GameConfig::two_player_3x3(), GameConfig::new(Variant::FourByFour, 2).unwrap()] {
        let side = config.grid_side();
        for state in reachable_states(config, 17, 300) {
            let positions = state.board().positions().to_vec();
            for card in 0..config.num_cards() {
                if state.board().is_locked(card) {
                    assert!(state.legal_move_targets(card).is_err());
                    continue;
                }
                let engine = sorted(state.legal_move_targets(card).unwrap());
                assert_eq!(engine, oracle_targets(&positions, card, side), "card {card}");
            }
        }
    }
}

#[test]
fn flood_fill_oracle_agrees_with_reachability_matrix() {
    for state in reachable_states(GameConfig::two_player_3x3(), 3, 60) {
        let positions = state.board().positions().to_vec();
        for card in 0..9 {
            assert_eq!(oracle_targets(&positions, card, 9), reachability_targets(&positions, card, 9));
        }
    }
}

#[test]
fn win_and_cluster_count_match_per_colour_flood_fill() {
    for config in [GameConfig::two_player_3x3(), GameConfig::new(Variant::FourByFour, 3).unwrap()] {
        for seed in 0..500 {
            let s = random_board_state(config, seed);
            let b = s.board();
            let k = config.num_colours();
            let side = config.grid_side();
            assert_eq!(s.complete_colour_clusters(), oracle_complete_colours(b.positions(), b.colours(), k, side));
            assert_eq!(s.check_win(), oracle_win(b.positions(), b.colours(), k, side));
        }
    }
}

#[test]
fn middle_of_a_row_cannot_move() {
    let board = BoardState::from_layout(9, &[Cell::new(4, 3), Cell::new(4, 4), Cell::new(4, 5)], &[0, 1, 2]).unwrap();
    assert!(board.legal_targets(1).is_empty());
    assert!(oracle_targets(board.positions(), 1, 9).is_empty());
}

#[test]
fn domino_card_goes_next_to_its_partner() {
    let board = BoardState::from_layout(9, &[Cell::new(4, 4), Cell::new(4, 5)], &[0, 0]).unwrap();
    let targets = sorted(board.legal_targets(0).cells(9).collect());
    assert_eq!(targets, vec![Cell::new(3, 5), Cell::new(4, 6), Cell::new(5, 5)]);
    assert_eq!(targets, oracle_targets(board.positions(), 0, 9));
}

#[test]
fn initial_block_corner_matches_oracle() {
    let state = GameState::new(GameConfig::two_player_3x3(), 0).unwrap();
    assert_eq!(state.board().edge_count(), 12);
    let corner = state.board().card_at(Cell::new(3, 3)).unwrap();
    let engine = sorted(state.legal_move_targets(corner).unwrap());
    assert_eq!(engine, reachability_targets(state.board().positions(), corner, 9));
    assert!(!engine.is_empty());
}

#[test]
fn new_game_layout_and_determinism() {
    for config in all_configs() {
        let k = config.variant.k() as u8;
        let offset = config.start_offset() as u8;
        let a = GameState::new(config, 42).unwrap();
        assert_eq!(a, GameState::new(config, 42).unwrap());
        let mut cells: Vec<Cell> = a.board().positions().to_vec();
        cells.sort();
        let block: Vec<Cell> = (0..k).flat_map(|r| (0..k).map(move |c| Cell::new(offset + r, offset + c))).collect();
        assert_eq!(cells, block);
        for colour in 0..k {
            assert_eq!(a.board().colours().iter().filter(|&&c| c == colour).count(), k as usize);
        }
        assert!(a.hints().iter().all(|h| h.status == HintStatus::FaceDown));
        let sizes = config.hint_deck.by_size();
        for size in 1..=3u32 {
            let mut sets: Vec<u8> = a.hints().iter().filter(|h| h.colours.count_ones() == size).map(|h| h.colours).collect();
            assert_eq!(sets.len(), sizes[size as usize - 1]);
            sets.sort_unstable();
            sets.dedup();
            assert_eq!(sets.len(), sizes[size as usize - 1], "hints of one size are distinct");
        }
        assert_eq!((a.current_player(), a.substep()), (0, Substep::Peek1));
    }
    let fresh = GameState::new(GameConfig::two_player_3x3(), 1).unwrap();
    assert_eq!(fresh.hints().len(), 4);
    assert_eq!(fresh.config().hint_deck.by_size(), [1, 3, 0]);
}

#[test]
fn deck_table() {
    let expected = [
        (Variant::ThreeByThree, 2, [1, 3, 0]),
        (Variant::ThreeByThree, 3, [2, 3, 0]),
        (Variant::ThreeByThree, 4, [3, 3, 0]),
        (Variant::FourByFour, 2, [2, 3, 2]),
        (Variant::FourByFour, 3, [2, 4, 3]),
        (Variant::FourByFour, 4, [3, 4, 3]),
    ];
    for (variant, players, sizes) in expected {
        assert_eq!(GameConfig::new(variant, players).unwrap().hint_deck.by_size(), sizes);
    }
    assert!(GameConfig::new(Variant::ThreeByThree, 5).is_err());
}

fn rows_board() -> BoardState {
    BoardState::centred_block(9, 3, &[0, 0, 0, 1, 1, 1, 2, 2, 2]).unwrap()
}

fn deck(status: [HintStatus; 4], placed: [Option<usize>; 4]) -> Vec<HintCard> {
    let colours = [0b001, 0b011, 0b110, 0b101];
    (0..4).map(|i| HintCard { colours: colours[i], status: status[i], placed_on: placed[i] }).collect()
}

#[test]
fn peek_then_end_early_scores_twenty() {
    let config = GameConfig::two_player_3x3();
    let board = rows_board();
    let hints = deck([HintStatus::FaceDown; 4], [None; 4]);
    let mut s = GameState::from_parts(config, board, &hints, 0, Substep::Peek1, &[], &[0, 0], 0).unwrap();
    let events = s.step(0, Action::EndGame).unwrap();
    assert!(s.is_terminal());
    assert!(events.contains(&Event::GameEnded { early: true, won: true }));
    assert_eq!(s.compute_score().unwrap(), 20);
    assert_eq!(terminal_reward(&s).unwrap(), 20.0);
}

#[test]
fn peek_events_and_phase() {
    let mut s = GameState::new(GameConfig::two_player_3x3(), 5).unwrap();
    let events = s.step(0, Action::ObserveCard { card: 3 }).unwrap();
    assert_eq!(events.as_slice(), &[Event::PeekedNewTeamCard { card: 3 }]);
    assert_eq!((s.substep(), s.phase().peeked()), (Substep::Peek2, &[3u8][..]));
    assert!(s.step(0, Action::ObserveCard { card: 3 }).is_err());
    assert!(s.step(1, Action::ObserveCard { card: 4 }).is_err());
    s.step(0, Action::ObserveCard { card: 4 }).unwrap();
    assert_eq!(s.substep(), Substep::Move);
}

#[test]
fn correct_placement_locks_the_card() {
    let config = GameConfig::two_player_3x3();
    let hints = deck([HintStatus::Revealed, HintStatus::FaceDown, HintStatus::FaceDown, HintStatus::FaceDown], [None; 4]);
    let mut s = GameState::from_parts(config, rows_board(), &hints, 0, Substep::Hint, &[0, 1], &[0, 0], 0).unwrap();
    let target = s.board().position(2);
    let events = s.step(0, Action::PlaceHint { hint: 0, target: HintTarget::Cell(target) }).unwrap();
    assert!(events.contains(&Event::HintPlacedCorrect { hint: 0, card: 2 }));
    assert!(s.board().is_locked(2));
    assert_eq!((s.current_player(), s.substep()), (1, Substep::Peek1));
}

#[test]
fn score_goldens() {
    assert_eq!(ScoreTerms { face_down: 1, not_placed: 1, correct: 2, wrong: 0 }.score(), 9);
    assert_eq!(ScoreTerms { face_down: 0, not_placed: 0, correct: 3, wrong: 1 }.score(), 2);
    assert_eq!(ScoreTerms { face_down: 4, not_placed: 0, correct: 0, wrong: 0 }.score(), 20);
    assert_eq!(loss_reward(true, 3, 1, 1), -4.0);
    assert_eq!(loss_reward(false, 3, 2, 0), -1.0);
}

#[test]
fn score_from_a_concrete_state() {
    let config = GameConfig::two_player_3x3();
    let hints = deck(
        [HintStatus::FaceDown, HintStatus::Revealed, HintStatus::Placed, HintStatus::Placed],
        [None, None, Some(7), Some(0)],
    );
    let mut s = GameState::from_parts(config, rows_board(), &hints, 0, Substep::Peek1, &[], &[0, 0], 0).unwrap();
    assert_eq!(s.score_terms(), ScoreTerms { face_down: 1, not_placed: 1, correct: 2, wrong: 0 });
    assert!(s.compute_score().is_err());
    s.step(0, Action::EndGame).unwrap();
    assert_eq!(s.compute_score().unwrap(), 9);
}

#[test]
fn every_playout_ends_within_the_bound() {
    for config in all_configs() {
        let layout = ActionLayout::new(&config);
        let mut r = rng(config.num_players as u64);
        for seed in 0..20 {
            let mut s = GameState::new(config, seed).unwrap();
            while !s.is_terminal() {
                let a = s.current_player();
                let legal = legal_actions(&s, a);
                let legal: Vec<usize> = legal.into_iter().filter(|&i| i != ActionLayout::END_GAME).collect();
                use rand::Rng;
                s.step(a, layout.decode(legal[r.random_range(0..legal.len())]).unwrap()).unwrap();
            }
            assert!(s.step_count() as usize <= config.max_episode_length());
        }
    }
    assert_eq!(GameConfig::two_player_3x3().max_episode_length(), 32);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn playout_invariants(seed in any::<u64>(), four in any::<bool>(), players in 2usize..=4) {
        let variant = if four { Variant::FourByFour } else { Variant::ThreeByThree };
        let config = GameConfig::new(variant, players).unwrap();
        let layout = ActionLayout::new(&config);
        let mut r = rng(seed);
        let mut s = GameState::new(config, seed).unwrap();
        let mut locked_at: Vec<Option<Cell>> = vec![None; config.num_cards()];
        let mut previous = s.clone();
        while !s.is_terminal() {
            let a = s.current_player();
            let legal = legal_actions(&s, a);
            use rand::Rng;
            let action = layout.decode(legal[r.random_range(0..legal.len())]).unwrap();
            s.step(a, action).unwrap();
            prop_assert_eq!(s.check_invariants(), Ok(()));
            let b = s.board();
            prop_assert!(flood_connected(b.positions(), config.grid_side()));
            prop_assert_eq!(&b.recompute_adjacency()[..config.num_cards()], b.adjacency());
            let placed = s.hints().iter().filter(|h| h.status == HintStatus::Placed).count();
            let up = s.hints().iter().filter(|h| h.status != HintStatus::Placed).count();
            prop_assert_eq!(placed + up, config.num_hints());
            for (card, seen) in locked_at.iter_mut().enumerate() {
                if let Some(cell) = *seen {
                    prop_assert_eq!(b.position(card), cell);
                    prop_assert!(b.is_locked(card));
                    if !s.is_terminal() {
                        prop_assert!(!s.phase().peeked().contains(&(card as u8)));
                    }
                } else if b.is_locked(card) {
                    *seen = Some(b.position(card));
                }
                prop_assert!(s.team_peeked(card) & previous.team_peeked(card) == previous.team_peeked(card));
            }
            prop_assert!(s.step_count() as usize <= config.max_episode_length());
            previous = s.clone();
        }
    }

    #[test]
    fn same_actions_same_states(seed in any::<u64>()) {
        let config = GameConfig::two_player_3x3();
        let layout = ActionLayout::new(&config);
        let mut r = rng(seed);
        let mut a = GameState::new(config, seed).unwrap();
        let mut b = GameState::new(config, seed).unwrap();
        while !a.is_terminal() {
            let p = a.current_player();
            let legal = legal_actions(&a, p);
            use rand::Rng;
            let action = layout.decode(legal[r.random_range(0..legal.len())]).unwrap();
            let ea = a.step(p, action).unwrap();
            let eb = b.step(p, action).unwrap();
            prop_assert_eq!(ea, eb);
            prop_assert_eq!(&a, &b);
        }
    }
}
