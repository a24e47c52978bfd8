//! First-order theory-of-mind diagnostic.
//!
//! A scenario freezes the game at one seat's decision and labels some legal
//! actions: `t0` moves are best on the seat's own knowledge, `t1` moves are
//! best once the partner's earlier peeks are taken into account, and `wrong`
//! moves break up what the seat knows. A policy is scored by the rank of each
//! labelled action in its probability vector.
//!
//! The reference layout (3x3 variant, colours 0 red, 1 blue, 2 green):
//!
//! ```text
//!        c3  c4  c5  c6
//!   r2   R3
//!   r3   G1  G2  D   E
//!   r4   C   R1  G3
//!   r5           R2
//! ```
//!
//! Seat 0 is about to move. It has seen C, D, R1 and R2 (C and R1 this turn).
//! Seat 1 has seen D and E, both blue. Bringing C next to E completes blue.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::action::{legal_mask, Action, ActionLayout, ActionMask};
use crate::agents::{Decision, Policy};
use crate::board::{BoardState, Cell};
use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::game::{GameState, HintCard, HintStatus, Substep};
use crate::observation::SeatView;
use crate::rng::{derive_seed, rng_from};
use crate::symmetry::{transform_action_to_agent, transform_state, Rotation, Symmetry};

pub const DIAGNOSTIC_SCHEMA: &str = "yle-diagnostic/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardSpec {
    pub row: u8,
    pub col: u8,
    pub colour: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintSpec {
    pub colours: Vec<u8>,
    pub status: HintStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placed_on: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticScenario {
    pub name: String,
    pub config: GameConfig,
    pub cards: Vec<CardSpec>,
    pub hints: Vec<HintSpec>,
    pub seat: usize,
    pub substep: Substep,
    pub peeked_this_turn: Vec<usize>,
    /// Per seat, bitmask of the cards it has peeked before.
    pub peek_history: Vec<u16>,
    pub t0: Vec<Action>,
    pub t1: Vec<Action>,
    pub wrong: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub schema: String,
    pub scenarios: Vec<DiagnosticScenario>,
}

/// Canonical indices of the three label classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSets {
    pub t0: Vec<usize>,
    pub t1: Vec<usize>,
    pub wrong: Vec<usize>,
}

impl DiagnosticScenario {
    pub fn state(&self) -> Result<GameState> {
        let positions: Vec<Cell> = self.cards.iter().map(|c| Cell::new(c.row, c.col)).collect();
        let colours: Vec<u8> = self.cards.iter().map(|c| c.colour).collect();
        let board = BoardState::from_layout(self.config.grid_side(), &positions, &colours)?;
        let hints: Vec<HintCard> = self
            .hints
            .iter()
            .map(|h| HintCard {
                colours: h.colours.iter().fold(0, |m, &c| m | 1 << c),
                status: h.status,
                placed_on: h.placed_on,
            })
            .collect();
        GameState::from_parts(self.config, board, &hints, self.seat, self.substep, &self.peeked_this_turn, &self.peek_history, 0)
    }

    /// Check legality and disjointness and return the labels as indices.
    pub fn labels(&self) -> Result<LabelSets> {
        let state = self.state()?;
        let layout = ActionLayout::new(&self.config);
        let mask = legal_mask(&state, self.seat);
        let encode = |actions: &[Action]| -> Result<Vec<usize>> {
            let mut out = Vec::with_capacity(actions.len());
            for a in actions {
                let index = layout.encode(a)?;
                if !mask.is_set(index) {
                    return Err(Error::Scenario(format!("{}: labelled action {a} is illegal", self.name)));
                }
                out.push(index);
            }
            Ok(out)
        };
        let sets = LabelSets { t0: encode(&self.t0)?, t1: encode(&self.t1)?, wrong: encode(&self.wrong)? };
        let mut all: Vec<usize> = sets.t0.iter().chain(&sets.t1).chain(&sets.wrong).copied().collect();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != n {
            return Err(Error::Scenario(format!("{}: label sets overlap", self.name)));
        }
        if sets.t0.is_empty() || sets.t1.is_empty() {
            return Err(Error::Scenario(format!("{}: t0 and t1 must be non-empty", self.name)));
        }
        Ok(sets)
    }

    /// The same scenario seen through `sym`.
    pub fn transformed(&self, sym: &Symmetry, name: String) -> Result<Self> {
        let state = transform_state(&self.state()?, sym);
        let side = self.config.grid_side();
        let map = |actions: &[Action]| actions.iter().map(|&a| transform_action_to_agent(a, sym, side)).collect();
        let board = state.board();
        Ok(Self {
            name,
            config: self.config,
            cards: (0..board.num_cards())
                .map(|i| {
                    let p = board.position(i);
                    CardSpec { row: p.row, col: p.col, colour: board.colour(i) }
                })
                .collect(),
            hints: self
                .hints
                .iter()
                .map(|h| HintSpec {
                    colours: {
                        let mask = sym.map_colour_mask(h.colours.iter().fold(0, |m, &c| m | 1 << c));
                        (0..8).filter(|c| mask >> c & 1 == 1).collect()
                    },
                    status: h.status,
                    placed_on: h.placed_on,
                })
                .collect(),
            seat: self.seat,
            substep: self.substep,
            peeked_this_turn: self.peeked_this_turn.clone(),
            peek_history: self.peek_history.clone(),
            t0: map(&self.t0),
            t1: map(&self.t1),
            wrong: map(&self.wrong),
        })
    }
}

/// Moves of a card `seat` has seen to a cell whose seen neighbours all have
/// other colours, with at least one such neighbour.
pub fn wrong_moves(state: &GameState, seat: usize) -> Vec<Action> {
    let board = state.board();
    let side = state.config().grid_side();
    let known = |card: usize| state.has_peeked(seat, card);
    let mut out = Vec::new();
    for card in (0..board.num_cards()).filter(|&c| known(c)) {
        let Ok(targets) = state.legal_move_targets(card) else { continue };
        for to in targets {
            let neighbours: Vec<usize> =
                to.neighbours(side).filter_map(|n| board.card_at(n)).filter(|&n| n != card && known(n)).collect();
            let clash = neighbours.iter().any(|&n| board.colour(n) != board.colour(card));
            let support = neighbours.iter().any(|&n| board.colour(n) == board.colour(card));
            if clash && !support {
                out.push(Action::MoveCard { card, to });
            }
        }
    }
    out
}

/// The reference scenario.
pub fn reference_scenario() -> Result<DiagnosticScenario> {
    const RED: u8 = 0;
    const BLUE: u8 = 1;
    const GREEN: u8 = 2;
    let card = |row, col, colour| CardSpec { row, col, colour };
    let cards = vec![
        card(4, 3, BLUE),  // 0 C
        card(3, 3, GREEN), // 1 G1
        card(3, 4, GREEN), // 2 G2
        card(3, 5, BLUE),  // 3 D
        card(3, 6, BLUE),  // 4 E
        card(4, 4, RED),   // 5 R1
        card(4, 5, GREEN), // 6 G3
        card(5, 5, RED),   // 7 R2
        card(2, 3, RED),   // 8 R3
    ];
    let hint = |colours: &[u8]| HintSpec { colours: colours.to_vec(), status: HintStatus::FaceDown, placed_on: None };
    let mv = |card, row, col| Action::MoveCard { card, to: Cell::new(row, col) };
    let mut scenario = DiagnosticScenario {
        name: "reference".into(),
        config: GameConfig::two_player_3x3(),
        cards,
        hints: vec![hint(&[RED]), hint(&[RED, BLUE]), hint(&[BLUE, GREEN]), hint(&[RED, GREEN])],
        seat: 0,
        substep: Substep::Move,
        peeked_this_turn: vec![0, 5],
        peek_history: vec![1 << 0 | 1 << 3 | 1 << 5 | 1 << 7, 1 << 3 | 1 << 4],
        t0: vec![mv(5, 5, 4), mv(5, 5, 6), mv(5, 6, 5), mv(7, 5, 4)],
        t1: vec![mv(0, 2, 5), mv(0, 2, 6), mv(0, 4, 6), mv(0, 3, 7)],
        wrong: Vec::new(),
    };
    let labelled: Vec<Action> = scenario.t0.iter().chain(&scenario.t1).copied().collect();
    scenario.wrong = wrong_moves(&scenario.state()?, 0).into_iter().filter(|a| !labelled.contains(a)).collect();
    Ok(scenario)
}

/// The reference scenario under every colour permutation and rotation.
pub fn fixture_family() -> Result<Vec<DiagnosticScenario>> {
    let base = reference_scenario()?;
    let k = base.config.num_colours() as u8;
    let mut perms: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..k {
        perms = perms
            .into_iter()
            .flat_map(|p| (0..k).filter(|c| !p.contains(c)).map(|c| [p.as_slice(), &[c]].concat()).collect::<Vec<_>>())
            .collect();
    }
    let mut out = Vec::with_capacity(perms.len() * 4);
    for perm in &perms {
        for rotation in Rotation::ALL {
            let sym = Symmetry { colour_perm: perm.clone(), rotation };
            let tag: String = perm.iter().map(|c| c.to_string()).collect();
            out.push(base.transformed(&sym, format!("reference/p{tag}/r{}", u32::from(rotation.quarter_turns()) * 90))?);
        }
    }
    Ok(out)
}

pub fn fixture_file() -> Result<FixtureFile> {
    Ok(FixtureFile { schema: DIAGNOSTIC_SCHEMA.into(), scenarios: fixture_family()? })
}

pub fn load_fixtures(path: &Path) -> Result<Vec<DiagnosticScenario>> {
    let file: FixtureFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.schema != DIAGNOSTIC_SCHEMA {
        return Err(Error::Scenario(format!("unknown fixture schema {:?}", file.schema)));
    }
    for s in &file.scenarios {
        s.labels()?;
    }
    Ok(file.scenarios)
}

/// 1-based rank of `action` among the legal actions, ordered by descending
/// probability and then ascending index.
pub fn rank_of(probabilities: &[f64], mask: &ActionMask, action: usize) -> usize {
    let p = probabilities[action];
    1 + mask.iter_set().filter(|&i| probabilities[i] > p || (probabilities[i] == p && i < action)).count()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ranks {
    pub t0: f64,
    pub t1: f64,
    pub wrong: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRanks {
    pub name: String,
    pub legal: usize,
    pub ranks: Ranks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub policy: String,
    /// Mean over scenarios of the per-scenario mean rank of each class.
    pub ranks: Ranks,
    pub scenarios: Vec<ScenarioRanks>,
}

impl DiagnosticReport {
    pub fn table(&self) -> String {
        format!(
            "policy {}: T0 rank {:.2}, T1 rank {:.2}, Wrong rank {:.2} over {} scenarios\n",
            self.policy,
            self.ranks.t0,
            self.ranks.t1,
            self.ranks.wrong,
            self.scenarios.len()
        )
    }
}

fn mean_rank(probabilities: &[f64], mask: &ActionMask, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return f64::NAN;
    }
    labels.iter().map(|&a| rank_of(probabilities, mask, a) as f64).sum::<f64>() / labels.len() as f64
}

/// Query `policy` once per scenario and average the label ranks.
pub fn evaluate_diagnostic(policy: &mut dyn Policy, scenarios: &[DiagnosticScenario], seed: u64) -> Result<DiagnosticReport> {
    let mut per = Vec::with_capacity(scenarios.len());
    for (n, scenario) in scenarios.iter().enumerate() {
        let labels = scenario.labels()?;
        let state = scenario.state()?;
        let layout = ActionLayout::new(&scenario.config);
        let mask = legal_mask(&state, scenario.seat);
        let view = SeatView::new(&state, scenario.seat, policy.memory_mode());
        let observation = policy.encoding().map(|e| view.encode(e));
        policy.reset(n as u64)?;
        let decision = Decision {
            view: &view,
            mask: &mask,
            layout: &layout,
            observation: observation.as_ref(),
            episode: n as u64,
            step: 0,
        };
        let out = policy.act(&decision, &mut rng_from(derive_seed(seed, &[n as u64])))?;
        let probabilities = out.probabilities.ok_or(Error::Contract("diagnostic policies must return probabilities"))?;
        if probabilities.len() != layout.count {
            return Err(Error::Contract("probability vector does not cover the action layout"));
        }
        per.push(ScenarioRanks {
            name: scenario.name.clone(),
            legal: mask.count(),
            ranks: Ranks {
                t0: mean_rank(&probabilities, &mask, &labels.t0),
                t1: mean_rank(&probabilities, &mask, &labels.t1),
                wrong: mean_rank(&probabilities, &mask, &labels.wrong),
            },
        });
    }
    let n = per.len().max(1) as f64;
    let ranks = Ranks {
        t0: per.iter().map(|s| s.ranks.t0).sum::<f64>() / n,
        t1: per.iter().map(|s| s.ranks.t1).sum::<f64>() / n,
        wrong: per.iter().map(|s| s.ranks.wrong).sum::<f64>() / n,
    };
    Ok(DiagnosticReport { policy: policy.name(), ranks, scenarios: per })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{GreedyAgent, PolicyOutput, RandomAgent};

    #[test]
    fn reference_labels_are_legal_and_disjoint() {
        let s = reference_scenario().unwrap();
        let labels = s.labels().unwrap();
        assert_eq!(labels.t0.len(), 4);
        assert_eq!(labels.t1.len(), 4);
        assert!(!labels.wrong.is_empty());
        let state = s.state().unwrap();
        assert!(!state.check_win());
    }

    #[test]
    fn family_has_every_variant() {
        let family = fixture_family().unwrap();
        assert_eq!(family.len(), 24);
        let base = reference_scenario().unwrap().labels().unwrap();
        for s in &family {
            let l = s.labels().unwrap();
            assert_eq!((l.t0.len(), l.t1.len(), l.wrong.len()), (base.t0.len(), base.t1.len(), base.wrong.len()));
        }
    }

    #[test]
    fn overlapping_labels_are_rejected() {
        let mut s = reference_scenario().unwrap();
        s.t1.push(s.t0[0]);
        assert!(matches!(s.labels(), Err(Error::Scenario(_))));
        let mut s = reference_scenario().unwrap();
        s.t0.push(Action::MoveCard { card: 0, to: Cell::new(0, 0) });
        assert!(s.labels().is_err());
    }

    #[test]
    fn ranks_break_ties_by_index() {
        let mask = ActionMask::from_indices(6, [1, 2, 4, 5]);
        let p = [0.0, 0.25, 0.25, 0.0, 0.4, 0.1];
        assert_eq!(rank_of(&p, &mask, 4), 1);
        assert_eq!(rank_of(&p, &mask, 1), 2);
        assert_eq!(rank_of(&p, &mask, 2), 3);
        assert_eq!(rank_of(&p, &mask, 5), 4);
    }

    struct Concentrated(usize);

    impl Policy for Concentrated {
        fn name(&self) -> String {
            "concentrated".into()
        }

        fn act(&mut self, d: &Decision<'_>, _rng: &mut crate::rng::Rng) -> Result<PolicyOutput> {
            Ok(PolicyOutput::deterministic(self.0, d.layout.count))
        }
    }

    #[test]
    fn concentrated_mass_ranks_first() {
        let s = reference_scenario().unwrap();
        let target = s.labels().unwrap().t1[0];
        let report = evaluate_diagnostic(&mut Concentrated(target), std::slice::from_ref(&s), 0).unwrap();
        let l = s.labels().unwrap();
        let mask = legal_mask(&s.state().unwrap(), 0);
        let mut p = vec![0.0; mask.len()];
        p[target] = 1.0;
        let expected_t1 = l.t1.iter().map(|&a| rank_of(&p, &mask, a) as f64).sum::<f64>() / 4.0;
        assert_eq!(report.ranks.t1, expected_t1);
        assert_eq!(rank_of(&p, &mask, target), 1);
    }

    struct NoProbabilities;

    impl Policy for NoProbabilities {
        fn name(&self) -> String {
            "bare".into()
        }

        fn act(&mut self, d: &Decision<'_>, _rng: &mut crate::rng::Rng) -> Result<PolicyOutput> {
            Ok(PolicyOutput { action: d.mask.first_set().unwrap(), probabilities: None })
        }
    }

    #[test]
    fn missing_probabilities_break_the_contract() {
        let s = reference_scenario().unwrap();
        assert!(matches!(evaluate_diagnostic(&mut NoProbabilities, &[s], 0), Err(Error::Contract(_))));
    }

    #[test]
    fn scripted_agents_give_finite_ranks() {
        let family = fixture_family().unwrap();
        for policy in [&mut GreedyAgent as &mut dyn Policy, &mut RandomAgent] {
            let report = evaluate_diagnostic(policy, &family, 1).unwrap();
            assert!(report.ranks.t0.is_finite() && report.ranks.t1.is_finite() && report.ranks.wrong.is_finite());
        }
    }
}
