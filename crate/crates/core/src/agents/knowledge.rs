//! What a seat can deduce about card colours from its own view.
//!
//! Sources are the colours visible in the view, the colour sets of placed
//! hints and colour counting: every colour has exactly `|C|` cards, so once a
//! colour's cards are all identified it is ruled out everywhere else.

use crate::board::Cell;
use crate::game::HintStatus;
use crate::observation::SeatView;

/// Leaves explored before a win proof is abandoned as inconclusive.
const PROOF_BUDGET: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Knowledge {
    num_colours: usize,
    /// Per card, the colours still possible as a bitmask.
    pub allowed: Vec<u8>,
}

impl Knowledge {
    pub fn from_view(view: &SeatView) -> Self {
        let k = view.config.num_colours();
        let all = ((1u16 << k) - 1) as u8;
        let mut allowed: Vec<u8> = view
            .cards
            .iter()
            .map(|c| c.colour.map_or(all, |colour| 1 << colour))
            .collect();
        for hint in &view.hints {
            if let (HintStatus::Placed, Some(card), Some(colours)) = (hint.status, hint.placed_on, hint.colours) {
                let narrowed = allowed[card] & colours;
                // A wrongly placed hint would leave nothing; keep the direct knowledge then.
                if narrowed != 0 {
                    allowed[card] = narrowed;
                }
            }
        }
        let mut knowledge = Self { num_colours: k, allowed };
        knowledge.propagate();
        knowledge
    }

    /// Colour counting until nothing changes.
    fn propagate(&mut self) {
        let k = self.num_colours;
        loop {
            let mut changed = false;
            for colour in 0..k as u8 {
                let bit = 1u8 << colour;
                let fixed = self.allowed.iter().filter(|&&a| a == bit).count();
                let possible = self.allowed.iter().filter(|&&a| a & bit != 0).count();
                if fixed >= k {
                    for a in &mut self.allowed {
                        if *a != bit && *a & bit != 0 {
                            *a &= !bit;
                            changed = true;
                        }
                    }
                } else if possible == k {
                    for a in &mut self.allowed {
                        if *a & bit != 0 && *a != bit {
                            *a = bit;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    pub fn colour(&self, card: usize) -> Option<u8> {
        let a = self.allowed[card];
        (a.count_ones() == 1).then(|| a.trailing_zeros() as u8)
    }

    pub fn known(&self) -> Vec<Option<u8>> {
        (0..self.allowed.len()).map(|c| self.colour(c)).collect()
    }

    pub fn num_known(&self) -> usize {
        self.allowed.iter().filter(|a| a.count_ones() == 1).count()
    }

    /// True when every colour assignment consistent with this knowledge has
    /// all colours clustered. Inconclusive searches count as not proven.
    pub fn proves_win(&self, positions: &[Cell], side: usize) -> bool {
        let n = self.allowed.len();
        let k = self.num_colours;
        let mut remaining = vec![k; k];
        let mut assignment = vec![u8::MAX; n];
        let mut open = Vec::new();
        for (card, slot) in assignment.iter_mut().enumerate() {
            match self.colour(card) {
                Some(c) => {
                    *slot = c;
                    if remaining[c as usize] == 0 {
                        return false;
                    }
                    remaining[c as usize] -= 1;
                }
                None => open.push(card),
            }
        }
        let adjacency = adjacency_rows(positions, side);
        let mut budget = PROOF_BUDGET;
        search(&open, 0, &self.allowed, &mut remaining, &mut assignment, &adjacency, k, &mut budget)
    }
}

#[allow(clippy::too_many_arguments)]
fn search(
    open: &[usize],
    depth: usize,
    allowed: &[u8],
    remaining: &mut [usize],
    assignment: &mut [u8],
    adjacency: &[u16],
    k: usize,
    budget: &mut usize,
) -> bool {
    if depth == open.len() {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        return (0..k as u8).all(|c| colour_connected(assignment, adjacency, c));
    }
    let card = open[depth];
    let mut any = false;
    for colour in 0..k as u8 {
        if allowed[card] >> colour & 1 == 0 || remaining[colour as usize] == 0 {
            continue;
        }
        any = true;
        remaining[colour as usize] -= 1;
        assignment[card] = colour;
        let ok = search(open, depth + 1, allowed, remaining, assignment, adjacency, k, budget);
        remaining[colour as usize] += 1;
        assignment[card] = u8::MAX;
        if !ok {
            return false;
        }
    }
    // No consistent completion: the knowledge is contradictory, so nothing is proven.
    any
}

pub(crate) fn adjacency_rows(positions: &[Cell], side: usize) -> Vec<u16> {
    let mut grid = vec![u8::MAX; side * side];
    for (i, p) in positions.iter().enumerate() {
        grid[p.index(side)] = i as u8;
    }
    positions
        .iter()
        .map(|p| {
            p.neighbours(side)
                .filter_map(|nb| match grid[nb.index(side)] {
                    u8::MAX => None,
                    j => Some(1u16 << j),
                })
                .fold(0, |m, b| m | b)
        })
        .collect()
}

fn colour_connected(assignment: &[u8], adjacency: &[u16], colour: u8) -> bool {
    let members = assignment.iter().enumerate().filter(|(_, &c)| c == colour).fold(0u16, |m, (i, _)| m | 1 << i);
    if members == 0 {
        return true;
    }
    let mut reached = 1u16 << members.trailing_zeros();
    let mut frontier = reached;
    while frontier != 0 {
        let i = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let next = adjacency[i] & members & !reached;
        reached |= next;
        frontier |= next;
    }
    reached == members
}
