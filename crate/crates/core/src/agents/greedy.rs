//! Deterministic rule-based baseline.
//!
//! Rules by substep, first match wins:
//!
//! 1. At the first peek, end the game if the seat's knowledge proves that
//!    every colour is clustered.
//! 2. Peek the lowest-index card whose colour is unknown, else one not yet
//!    peeked by this seat.
//! 3. Move to maximise the summed size of the largest known component per
//!    colour, then the number of known same-colour contacts, then closeness
//!    of the moved card to the centre.
//! 4. Place a revealed hint on a known matching card, else reveal the
//!    lowest face-down hint, else place where a match is most likely.
//!
//! Remaining ties go to the lowest action index.

use super::knowledge::{adjacency_rows, Knowledge};
use super::{legal, Decision, Policy, PolicyOutput};
use crate::action::{Action, ActionLayout, HintTarget};
use crate::board::Cell;
use crate::config::HintTargetIndexing;
use crate::error::Result;
use crate::game::{HintStatus, Substep};
use crate::observation::{MemoryMode, SeatView};
use crate::rng::Rng;

#[derive(Debug, Clone, Default)]
pub struct GreedyAgent;

impl Policy for GreedyAgent {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn memory_mode(&self) -> MemoryMode {
        MemoryMode::Perfect
    }

    fn act(&mut self, decision: &Decision<'_>, _rng: &mut Rng) -> Result<PolicyOutput> {
        greedy_act(decision)
    }
}

pub(crate) fn greedy_act(decision: &Decision<'_>) -> Result<PolicyOutput> {
    let layout = decision.layout;
    let legal = legal(decision.mask);
    let view = decision.view;
    if legal.len() == 1 {
        return Ok(PolicyOutput::deterministic(legal[0], layout.count));
    }
    let knowledge = Knowledge::from_view(view);
    let positions: Vec<Cell> = view.cards.iter().map(|c| c.position).collect();
    let side = view.config.grid_side();
    let action = match view.substep {
        Substep::Peek1 | Substep::Peek2 => {
            if view.substep == Substep::Peek1
                && decision.mask.is_set(ActionLayout::END_GAME)
                && knowledge.proves_win(&positions, side)
            {
                ActionLayout::END_GAME
            } else {
                choose_peek(view, &knowledge, &legal, layout)
            }
        }
        Substep::Move => {
            return Ok(choose_move(&knowledge, &positions, view.config.num_colours(), side, &legal, layout));
        }
        Substep::Hint => choose_hint(view, &knowledge, &legal, layout),
    };
    Ok(PolicyOutput::deterministic(action, layout.count))
}

fn observed_card(layout: &ActionLayout, index: usize) -> Option<usize> {
    match layout.decode(index) {
        Ok(Action::ObserveCard { card }) => Some(card),
        _ => None,
    }
}

fn choose_peek(view: &SeatView, knowledge: &Knowledge, legal: &[usize], layout: &ActionLayout) -> usize {
    let peeks: Vec<(usize, usize)> =
        legal.iter().filter_map(|&i| observed_card(layout, i).map(|card| (i, card))).collect();
    peeks
        .iter()
        .find(|&&(_, card)| knowledge.colour(card).is_none())
        .or_else(|| peeks.iter().find(|&&(_, card)| !view.cards[card].peeked_by_self))
        .or(peeks.first())
        .map_or(legal[0], |&(i, _)| i)
}

/// Summed size of the largest known component of each colour, and the
/// number of adjacent known same-colour pairs.
fn cluster_value(known: &[Option<u8>], adjacency: &[u16], num_colours: usize) -> (u32, u32) {
    let mut total = 0;
    let mut contacts = 0;
    for colour in 0..num_colours as u8 {
        let members =
            known.iter().enumerate().filter(|(_, &c)| c == Some(colour)).fold(0u16, |m, (i, _)| m | 1 << i);
        let mut unvisited = members;
        let mut largest = 0;
        while unvisited != 0 {
            let start = unvisited.trailing_zeros() as usize;
            let mut reached = 1u16 << start;
            let mut frontier = reached;
            while frontier != 0 {
                let i = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let next = adjacency[i] & members & !reached;
                reached |= next;
                frontier |= next;
            }
            largest = largest.max(reached.count_ones());
            unvisited &= !reached;
        }
        total += largest;
        let mut m = members;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            contacts += (adjacency[i] & members).count_ones();
        }
    }
    (total, contacts / 2)
}

fn choose_move(
    knowledge: &Knowledge,
    positions: &[Cell],
    num_colours: usize,
    side: usize,
    legal: &[usize],
    layout: &ActionLayout,
) -> PolicyOutput {
    let known = knowledge.known();
    let centre = side as i32 - 1;
    let mut moved = positions.to_vec();
    let mut keys = Vec::with_capacity(legal.len());
    for &index in legal {
        let Ok(Action::MoveCard { card, to }) = layout.decode(index) else {
            keys.push((0, 0, i32::MIN));
            continue;
        };
        moved[card] = to;
        let (value, contacts) = cluster_value(&known, &adjacency_rows(&moved, side), num_colours);
        moved[card] = positions[card];
        let spread = (2 * to.row as i32 - centre).abs() + (2 * to.col as i32 - centre).abs();
        keys.push((value, contacts, -spread));
    }
    let mut distinct = keys.clone();
    distinct.sort_unstable_by(|a, b| b.cmp(a));
    distinct.dedup();
    let mut probabilities = vec![0.0; layout.count];
    for (&index, key) in legal.iter().zip(&keys) {
        let rank = distinct.binary_search_by(|k| key.cmp(k)).expect("key is present");
        probabilities[index] = 0.5f64.powi(rank as i32);
    }
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= total);
    let best = legal.iter().zip(&keys).find(|(_, k)| **k == distinct[0]).map(|(&i, _)| i).expect("legal is non-empty");
    PolicyOutput { action: best, probabilities: Some(probabilities) }
}

fn place_index(layout: &ActionLayout, view: &SeatView, hint: usize, card: usize) -> usize {
    match layout.indexing {
        HintTargetIndexing::Cell => layout.place_on_cell(hint, view.cards[card].position),
        HintTargetIndexing::Card => layout.place_on_card(hint, card),
    }
}

fn neighbour_shares_colour(view: &SeatView, knowledge: &Knowledge, card: usize, colour: u8) -> bool {
    let row = view.adjacency[card];
    (0..view.cards.len()).any(|j| row >> j & 1 == 1 && knowledge.colour(j) == Some(colour))
}

fn choose_hint(view: &SeatView, knowledge: &Knowledge, legal: &[usize], layout: &ActionLayout) -> usize {
    let is_legal = |i: usize| legal.binary_search(&i).is_ok();
    let mut best: Option<((i32, bool, bool), usize)> = None;
    for hint in view.hints.iter().filter(|h| h.status == HintStatus::Revealed) {
        let colours = hint.colours.expect("revealed hints show their colours");
        for card in view.cards.iter().filter(|c| !c.locked) {
            let Some(colour) = knowledge.colour(card.id) else { continue };
            if colours >> colour & 1 == 0 {
                continue;
            }
            let index = place_index(layout, view, hint.id, card.id);
            if !is_legal(index) {
                continue;
            }
            let key = (
                -(colours.count_ones() as i32),
                neighbour_shares_colour(view, knowledge, card.id, colour),
                !card.peeked_by_others,
            );
            if best.is_none_or(|(k, i)| key > k || (key == k && index < i)) {
                best = Some((key, index));
            }
        }
    }
    if let Some((_, index)) = best {
        return index;
    }
    if let Some(&reveal) = legal.iter().find(|&&i| matches!(layout.decode(i), Ok(Action::RevealHint { .. }))) {
        return reveal;
    }
    let mut fallback: Option<(f64, usize)> = None;
    for &index in legal {
        let Ok(Action::PlaceHint { hint, target }) = layout.decode(index) else { continue };
        let card = match target {
            HintTarget::Card(card) => card,
            HintTarget::Cell(cell) => match view.card_at(cell) {
                Some(card) => card,
                None => continue,
            },
        };
        let colours = view.hints[hint].colours.unwrap_or(0);
        let allowed = knowledge.allowed[card];
        let chance = (allowed & colours).count_ones() as f64 / allowed.count_ones().max(1) as f64;
        if fallback.is_none_or(|(c, _)| chance > c) {
            fallback = Some((chance, index));
        }
    }
    fallback.map_or(legal[0], |(_, i)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::legal_mask;
    use crate::board::BoardState;
    use crate::config::GameConfig;
    use crate::game::{GameState, HintCard};
    use crate::rng::rng_from;

    fn act(state: &GameState) -> PolicyOutput {
        let seat = state.current_player();
        let view = SeatView::new(state, seat, MemoryMode::Perfect);
        let mask = legal_mask(state, seat);
        let layout = ActionLayout::new(state.config());
        let decision = Decision { view: &view, mask: &mask, layout: &layout, observation: None, episode: 0, step: 0 };
        GreedyAgent.act(&decision, &mut rng_from(0)).unwrap()
    }

    fn deck() -> Vec<HintCard> {
        [0b001, 0b011, 0b101, 0b110].iter().map(|&c| HintCard::face_down(c)).collect()
    }

    fn rows(history: u16, substep: Substep, peeked: &[usize]) -> GameState {
        let board = BoardState::centred_block(9, 3, &[0, 0, 0, 1, 1, 1, 2, 2, 2]).unwrap();
        GameState::from_parts(GameConfig::two_player_3x3(), board, &deck(), 0, substep, peeked, &[history, 0], 0)
            .unwrap()
    }

    #[test]
    fn ends_when_win_is_proven() {
        let out = act(&rows(0b1_1111_1111, Substep::Peek1, &[]));
        assert_eq!(out.action, ActionLayout::END_GAME);
        assert_eq!(out.probabilities.unwrap()[0], 1.0);
    }

    #[test]
    fn peeks_lowest_unpeeked() {
        let s = rows(0b11, Substep::Peek1, &[]);
        let layout = ActionLayout::new(s.config());
        assert_eq!(act(&s).action, layout.observe(2));
    }

    #[test]
    fn moves_keep_known_clusters() {
        let s = rows(0b11_1111, Substep::Move, &[0, 1]);
        let out = act(&s);
        let layout = ActionLayout::new(s.config());
        let Ok(Action::MoveCard { card, to }) = layout.decode(out.action) else { panic!() };
        let mut next = s.clone();
        next.step(0, Action::MoveCard { card, to }).unwrap();
        let view = SeatView::new(&next, 0, MemoryMode::Perfect);
        let kn = Knowledge::from_view(&view);
        let adjacency = adjacency_rows(next.board().positions(), 9);
        assert_eq!(cluster_value(&kn.known(), &adjacency, 3).0, 9);
        let p = out.probabilities.unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&x| x <= p[out.action]));
    }

    #[test]
    fn places_revealed_hint_on_known_match() {
        let mut hints = deck();
        hints[2].status = HintStatus::Revealed;
        let board = BoardState::centred_block(9, 3, &[0, 0, 0, 1, 1, 1, 2, 2, 2]).unwrap();
        let s = GameState::from_parts(GameConfig::two_player_3x3(), board, &hints, 0, Substep::Hint, &[7, 8], &[0b1000_0000, 0], 0)
            .unwrap();
        let layout = ActionLayout::new(s.config());
        assert_eq!(layout.decode(act(&s).action).unwrap(), Action::PlaceHint { hint: 2, target: HintTarget::Cell(Cell::new(5, 4)) });
    }
}
