//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the engine's connectivity or legality code: the oracles
//! work from raw cell coordinates only.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yle_core::action::{legal_actions, ActionLayout};
use yle_core::{BoardState, Cell, GameConfig, GameState, HintCard, Substep};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid_neighbours(cell: Cell, side: usize) -> Vec<Cell> {
    let (r, c) = (cell.row as i32, cell.col as i32);
    [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        .into_iter()
        .filter(|&(r, c)| r >= 0 && c >= 0 && (r as usize) < side && (c as usize) < side)
        .map(|(r, c)| Cell::new(r as u8, c as u8))
        .collect()
}

/// Breadth-first flood fill over occupied cells.
pub fn flood_connected(cells: &[Cell], side: usize) -> bool {
    if cells.is_empty() {
        return true;
    }
    let occupied: HashSet<Cell> = cells.iter().copied().collect();
    let mut seen = HashSet::from([cells[0]]);
    let mut queue = VecDeque::from([cells[0]]);
    while let Some(cell) = queue.pop_front() {
        for n in grid_neighbours(cell, side) {
            if occupied.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == occupied.len()
}

/// Connectivity through the reachability matrix `(I + A)^(n-1)`, with matrix
/// rows stored as bitsets and the power taken by repeated squaring. Powers of
/// `I + A` saturate, so overshooting `n - 1` changes nothing.
pub fn reachability_connected(cells: &[Cell]) -> bool {
    let n = cells.len();
    if n <= 1 {
        return true;
    }
    let mut m: Vec<u32> = (0..n)
        .map(|i| (0..n).filter(|&j| i == j || cells[i].manhattan(cells[j]) == 1).fold(0, |r, j| r | 1 << j))
        .collect();
    let mut power = 1;
    while power < n - 1 {
        m = (0..n).map(|i| (0..n).filter(|&k| m[i] >> k & 1 == 1).fold(0, |r, k| r | m[k])).collect();
        power *= 2;
    }
    m[0] == (1u32 << n) - 1
}

/// Lift `card`, try every cell of the grid, keep those that leave one component.
pub fn oracle_targets(positions: &[Cell], card: usize, side: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for row in 0..side as u8 {
        for col in 0..side as u8 {
            let to = Cell::new(row, col);
            if positions.contains(&to) {
                continue;
            }
            let mut moved = positions.to_vec();
            moved[card] = to;
            if flood_connected(&moved, side) {
                out.push(to);
            }
        }
    }
    out
}

/// Same as [`oracle_targets`] with the reachability-matrix test.
pub fn reachability_targets(positions: &[Cell], card: usize, side: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for row in 0..side as u8 {
        for col in 0..side as u8 {
            let to = Cell::new(row, col);
            if positions.contains(&to) {
                continue;
            }
            let mut moved = positions.to_vec();
            moved[card] = to;
            if reachability_connected(&moved) {
                out.push(to);
            }
        }
    }
    out
}

pub fn oracle_complete_colours(positions: &[Cell], colours: &[u8], num_colours: usize, side: usize) -> usize {
    (0..num_colours as u8)
        .filter(|&c| {
            let cells: Vec<Cell> = positions.iter().zip(colours).filter(|(_, &k)| k == c).map(|(p, _)| *p).collect();
            flood_connected(&cells, side)
        })
        .count()
}

pub fn oracle_win(positions: &[Cell], colours: &[u8], num_colours: usize, side: usize) -> bool {
    oracle_complete_colours(positions, colours, num_colours, side) == num_colours
}

/// A random connected polyomino of `n` cells grown around the grid centre.
pub fn random_shape(n: usize, side: usize, rng: &mut impl Rng) -> Vec<Cell> {
    let centre = Cell::new(side as u8 / 2, side as u8 / 2);
    let mut cells = vec![centre];
    while cells.len() < n {
        let frontier: Vec<Cell> = cells
            .iter()
            .flat_map(|&c| grid_neighbours(c, side))
            .filter(|c| !cells.contains(c))
            .collect();
        cells.push(frontier[rng.random_range(0..frontier.len())]);
    }
    cells.shuffle(rng);
    cells
}

pub fn random_colours(k: usize, rng: &mut impl Rng) -> Vec<u8> {
    let mut colours: Vec<u8> = (0..k * k).map(|i| (i / k) as u8).collect();
    colours.shuffle(rng);
    colours
}

/// A Peek1 state on a random connected board with the default deck.
pub fn random_board_state(config: GameConfig, seed: u64) -> GameState {
    let mut r = rng(seed);
    let k = config.variant.k();
    let positions = random_shape(k * k, config.grid_side(), &mut r);
    let colours = random_colours(k, &mut r);
    let board = BoardState::from_layout(config.grid_side(), &positions, &colours).unwrap();
    let hints: Vec<HintCard> = GameState::new(config, seed).unwrap().hints().to_vec();
    GameState::from_parts(config, board, &hints, 0, Substep::Peek1, &[], &vec![0; config.num_players], 0).unwrap()
}

/// States along uniformly random legal playouts, `count` in total.
pub fn reachable_states(config: GameConfig, seed: u64, count: usize) -> Vec<GameState> {
    let mut r = rng(seed);
    let layout = ActionLayout::new(&config);
    let mut out = Vec::with_capacity(count);
    let mut episode = 0;
    while out.len() < count {
        let mut state = GameState::new(config, seed.wrapping_add(episode)).unwrap();
        episode += 1;
        while !state.is_terminal() && out.len() < count {
            out.push(state.clone());
            let agent = state.current_player();
            let legal = legal_actions(&state, agent);
            let action = layout.decode(legal[r.random_range(0..legal.len())]).unwrap();
            state.step(agent, action).unwrap();
        }
    }
    out
}

pub fn all_configs() -> Vec<GameConfig> {
    let mut out = Vec::new();
    for variant in [yle_core::Variant::ThreeByThree, yle_core::Variant::FourByFour] {
        for players in 2..=4 {
            out.push(GameConfig::new(variant, players).unwrap());
        }
    }
    out
}
