//! Card positions, the side-adjacency graph and connectivity queries.
//!
//! Cards are vertices; two cards share an edge when they sit on side-adjacent
//! cells. Every adjacency row is a `u16` bitmask over card indices, which keeps
//! flood fills to a handful of bitwise operations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{MAX_CARDS, MAX_GRID_SIDE};

pub const MAX_CELLS: usize = MAX_GRID_SIDE * MAX_GRID_SIDE;
const EMPTY: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: u8,
    pub col: u8,
}

impl Cell {
    pub const fn new(row: u8, col: u8) -> Self {
        Self { row, col }
    }

    pub fn from_index(index: usize, side: usize) -> Self {
        Self { row: (index / side) as u8, col: (index % side) as u8 }
    }

    /// Row-major index on a `side x side` grid.
    pub fn index(self, side: usize) -> usize {
        self.row as usize * side + self.col as usize
    }

    pub fn in_grid(self, side: usize) -> bool {
        (self.row as usize) < side && (self.col as usize) < side
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        (self.row as i32 - other.row as i32).unsigned_abs()
            + (self.col as i32 - other.col as i32).unsigned_abs()
    }

    /// Side-adjacent cells inside the grid.
    pub fn neighbours(self, side: usize) -> impl Iterator<Item = Cell> {
        let (r, c) = (self.row as i32, self.col as i32);
        let side = side as i32;
        [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
            .into_iter()
            .filter(move |&(r, c)| r >= 0 && c >= 0 && r < side && c < side)
            .map(|(r, c)| Cell::new(r as u8, c as u8))
    }

    pub fn is_border(self, side: usize) -> bool {
        self.row == 0 || self.col == 0 || self.row as usize == side - 1 || self.col as usize == side - 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Set of grid cells as a row-major bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CellSet(u128);

impl CellSet {
    pub fn insert(&mut self, index: usize) {
        self.0 |= 1u128 << index;
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }

    pub fn cells(&self, side: usize) -> impl Iterator<Item = Cell> {
        self.indices().map(move |i| Cell::from_index(i, side))
    }
}

/// Iterate the set bits of a card mask.
pub(crate) fn bits(mut mask: u16) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let i = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(i)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoardState {
    side: u8,
    num_cards: u8,
    positions: [Cell; MAX_CARDS],
    colours: [u8; MAX_CARDS],
    adjacency: [u16; MAX_CARDS],
    locked: u16,
    occupancy: [u8; MAX_CELLS],
}

impl BoardState {
    /// Build a board from explicit positions and colours. Cards start unlocked.
    pub fn from_layout(side: usize, positions: &[Cell], colours: &[u8]) -> Result<Self> {
        if side == 0 || side > MAX_GRID_SIDE {
            return Err(Error::Config(format!("grid side {side} out of range")));
        }
        if positions.len() != colours.len() || positions.is_empty() || positions.len() > MAX_CARDS {
            return Err(Error::Config(format!(
                "{} positions and {} colours for at most {MAX_CARDS} cards",
                positions.len(),
                colours.len()
            )));
        }
        let mut board = BoardState {
            side: side as u8,
            num_cards: positions.len() as u8,
            positions: [Cell::default(); MAX_CARDS],
            colours: [0; MAX_CARDS],
            adjacency: [0; MAX_CARDS],
            locked: 0,
            occupancy: [EMPTY; MAX_CELLS],
        };
        for (i, (&cell, &colour)) in positions.iter().zip(colours).enumerate() {
            if !cell.in_grid(side) {
                return Err(Error::OutOfGrid { row: cell.row, col: cell.col, side: side as u8 });
            }
            let slot = &mut board.occupancy[cell.index(side)];
            if *slot != EMPTY {
                return Err(Error::Config(format!("cards {} and {i} share cell {cell}", *slot)));
            }
            *slot = i as u8;
            board.positions[i] = cell;
            board.colours[i] = colour;
        }
        board.adjacency = board.recompute_adjacency();
        Ok(board)
    }

    /// `k x k` block centred on the grid, filled row-major with `colours`.
    pub fn centred_block(side: usize, k: usize, colours: &[u8]) -> Result<Self> {
        let offset = (side - k) / 2;
        let positions: Vec<Cell> = (0..k * k)
            .map(|i| Cell::new((offset + i / k) as u8, (offset + i % k) as u8))
            .collect();
        Self::from_layout(side, &positions, colours)
    }

    pub fn side(&self) -> usize {
        self.side as usize
    }

    pub fn num_cards(&self) -> usize {
        self.num_cards as usize
    }

    pub fn all_cards(&self) -> u16 {
        ((1u32 << self.num_cards) - 1) as u16
    }

    pub fn positions(&self) -> &[Cell] {
        &self.positions[..self.num_cards()]
    }

    pub fn position(&self, card: usize) -> Cell {
        self.positions[card]
    }

    pub fn colours(&self) -> &[u8] {
        &self.colours[..self.num_cards()]
    }

    pub fn colour(&self, card: usize) -> u8 {
        self.colours[card]
    }

    /// Bitmask of the cards side-adjacent to `card`.
    pub fn adjacency_row(&self, card: usize) -> u16 {
        self.adjacency[card]
    }

    pub fn adjacency(&self) -> &[u16] {
        &self.adjacency[..self.num_cards()]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a] >> b & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency().iter().map(|row| row.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn is_locked(&self, card: usize) -> bool {
        self.locked >> card & 1 == 1
    }

    pub fn locked_mask(&self) -> u16 {
        self.locked
    }

    pub fn unlocked_mask(&self) -> u16 {
        self.all_cards() & !self.locked
    }

    pub(crate) fn lock(&mut self, card: usize) {
        self.locked |= 1 << card;
    }

    pub fn card_at(&self, cell: Cell) -> Option<usize> {
        if !cell.in_grid(self.side()) {
            return None;
        }
        match self.occupancy[cell.index(self.side())] {
            EMPTY => None,
            card => Some(card as usize),
        }
    }

    /// Adjacency rebuilt from scratch out of the positions.
    pub fn recompute_adjacency(&self) -> [u16; MAX_CARDS] {
        let side = self.side();
        let mut adjacency = [0u16; MAX_CARDS];
        for (i, row) in adjacency.iter_mut().enumerate().take(self.num_cards()) {
            for nb in self.positions[i].neighbours(side) {
                if let Some(j) = self.card_at(nb) {
                    *row |= 1 << j;
                }
            }
        }
        adjacency
    }

    /// Relocate `card` and replace its adjacency row and column.
    pub(crate) fn move_card(&mut self, card: usize, to: Cell) {
        let side = self.side();
        let from = self.positions[card];
        self.occupancy[from.index(side)] = EMPTY;
        self.occupancy[to.index(side)] = card as u8;
        self.positions[card] = to;
        for j in bits(self.adjacency[card]) {
            self.adjacency[j] &= !(1 << card);
        }
        let mut row = 0u16;
        for nb in to.neighbours(side) {
            if let Some(j) = self.card_at(nb) {
                row |= 1 << j;
                self.adjacency[j] |= 1 << card;
            }
        }
        self.adjacency[card] = row;
    }

    /// Cards reachable from `start` through adjacency edges that stay inside `members`.
    pub fn component(&self, start: usize, members: u16) -> u16 {
        let mut visited = 1u16 << start;
        let mut frontier = visited;
        while frontier != 0 {
            let mut next = 0u16;
            for i in bits(frontier) {
                next |= self.adjacency[i];
            }
            next &= members & !visited;
            visited |= next;
            frontier = next;
        }
        visited
    }

    /// Whether the induced subgraph on `members` is connected. Empty and
    /// single-card sets count as connected.
    pub fn is_connected(&self, members: u16) -> bool {
        if members == 0 {
            return true;
        }
        let start = members.trailing_zeros() as usize;
        self.component(start, members) == members
    }

    pub fn all_connected(&self) -> bool {
        self.is_connected(self.all_cards())
    }

    pub fn colour_mask(&self, colour: u8) -> u16 {
        self.colours()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == colour)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// Number of colours whose cards form one connected component.
    pub fn complete_colours(&self, num_colours: usize) -> usize {
        (0..num_colours as u8).filter(|&c| self.is_connected(self.colour_mask(c))).count()
    }

    /// Every cell `card` may move to while keeping all cards connected.
    ///
    /// The card is lifted once and the remaining cards are split into
    /// components. A free cell is legal exactly when its occupied neighbours
    /// touch every component, so at most four components can be rejoined.
    pub fn legal_targets(&self, card: usize) -> CellSet {
        let side = self.side();
        let remaining = self.all_cards() & !(1 << card);
        let mut targets = CellSet::default();
        if remaining == 0 {
            return targets;
        }

        let mut component_of = [0u8; MAX_CARDS];
        let mut unassigned = remaining;
        let mut count = 0u8;
        while unassigned != 0 {
            let start = unassigned.trailing_zeros() as usize;
            let comp = self.component(start, remaining);
            for j in bits(comp) {
                component_of[j] = count;
            }
            unassigned &= !comp;
            count += 1;
            if count > 4 {
                return targets;
            }
        }
        let all_components = (1u8 << count) - 1;

        let mut tested = CellSet::default();
        for j in bits(remaining) {
            for cell in self.positions[j].neighbours(side) {
                let index = cell.index(side);
                if self.occupancy[index] != EMPTY || tested.contains(index) {
                    continue;
                }
                tested.insert(index);
                let mut touched = 0u8;
                for nb in cell.neighbours(side) {
                    match self.occupancy[nb.index(side)] {
                        EMPTY => {}
                        other if other as usize == card => {}
                        other => touched |= 1 << component_of[other as usize],
                    }
                }
                if touched == all_components {
                    targets.insert(index);
                }
            }
        }
        targets
    }

    pub(crate) fn recolour(&mut self, perm: &[u8]) {
        for c in &mut self.colours[..self.num_cards as usize] {
            *c = perm[*c as usize];
        }
    }

    /// Move every card through `map`, which must be a bijection of the grid.
    pub(crate) fn remap_cells(&mut self, map: impl Fn(Cell) -> Cell) {
        let side = self.side();
        self.occupancy = [EMPTY; MAX_CELLS];
        for i in 0..self.num_cards() {
            let cell = map(self.positions[i]);
            self.positions[i] = cell;
            self.occupancy[cell.index(side)] = i as u8;
        }
        self.adjacency = self.recompute_adjacency();
    }
}
