//! Colour permutations and grid rotations for other-play.
//!
//! A [`Symmetry`] maps the true environment frame to an agent frame: colour
//! `c` becomes `colour_perm[c]` and cell `(r, c)` is rotated by quarter turns,
//! each turn mapping `(r, c)` to `(c, g - 1 - r)`. Card and hint indices are
//! the same in every frame.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{Action, ActionLayout, ActionMask, HintTarget};
use crate::board::Cell;
use crate::config::GameConfig;
use crate::error::Result;
use crate::game::GameState;
use crate::observation::{ImageObservation, Observation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryMode {
    #[default]
    None,
    ColourOnly,
    ColourAndRotation,
}

impl std::str::FromStr for SymmetryMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "c" | "colour" => Ok(Self::ColourOnly),
            "c+r" | "colour+rotation" => Ok(Self::ColourAndRotation),
            other => Err(crate::Error::Config(format!("unknown symmetry mode {other:?} (none, c, c+r)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn quarter_turns(self) -> u8 {
        self as u8
    }

    pub fn from_quarter_turns(n: u8) -> Self {
        Self::ALL[(n % 4) as usize]
    }

    pub fn inverse(self) -> Self {
        Self::from_quarter_turns(4 - self.quarter_turns())
    }

    pub fn then(self, other: Rotation) -> Self {
        Self::from_quarter_turns(self.quarter_turns() + other.quarter_turns())
    }

    pub fn apply(self, cell: Cell, side: usize) -> Cell {
        let last = side as u8 - 1;
        (0..self.quarter_turns()).fold(cell, |c, _| Cell::new(c.col, last - c.row))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symmetry {
    /// `colour_perm[c]` is the agent-frame colour of true colour `c`.
    pub colour_perm: Vec<u8>,
    pub rotation: Rotation,
}

impl Symmetry {
    pub fn identity(num_colours: usize) -> Self {
        Self { colour_perm: (0..num_colours as u8).collect(), rotation: Rotation::R0 }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Rotation::R0 && self.colour_perm.iter().enumerate().all(|(i, &c)| i == c as usize)
    }

    pub fn inverse(&self) -> Self {
        let mut perm = vec![0u8; self.colour_perm.len()];
        for (c, &p) in self.colour_perm.iter().enumerate() {
            perm[p as usize] = c as u8;
        }
        Self { colour_perm: perm, rotation: self.rotation.inverse() }
    }

    /// Apply `self` first, then `other`.
    pub fn then(&self, other: &Symmetry) -> Self {
        Self {
            colour_perm: self.colour_perm.iter().map(|&c| other.colour_perm[c as usize]).collect(),
            rotation: self.rotation.then(other.rotation),
        }
    }

    pub fn map_colour_mask(&self, mask: u8) -> u8 {
        self.colour_perm.iter().enumerate().filter(|(c, _)| mask >> c & 1 == 1).fold(0, |m, (_, &p)| m | 1 << p)
    }

    pub fn sample(num_colours: usize, mode: SymmetryMode, rng: &mut impl Rng) -> Self {
        let mut sym = Self::identity(num_colours);
        if mode != SymmetryMode::None {
            sym.colour_perm.shuffle(rng);
        }
        if mode == SymmetryMode::ColourAndRotation {
            sym.rotation = Rotation::from_quarter_turns(rng.random_range(0..4));
        }
        sym
    }
}

/// One independent draw per agent.
pub fn sample_symmetries(config: &GameConfig, mode: SymmetryMode, seed: u64) -> Vec<Symmetry> {
    let mut rng = crate::rng::rng_from(seed);
    (0..config.num_players).map(|_| Symmetry::sample(config.num_colours(), mode, &mut rng)).collect()
}

/// The game as seen from the agent frame of `sym`.
pub fn transform_state(state: &GameState, sym: &Symmetry) -> GameState {
    let mut next = state.clone();
    let side = state.config().grid_side();
    next.board.recolour(&sym.colour_perm);
    if sym.rotation != Rotation::R0 {
        next.board.remap_cells(|c| sym.rotation.apply(c, side));
    }
    for hint in &mut next.hints[..state.config().num_hints()] {
        hint.colours = sym.map_colour_mask(hint.colours);
    }
    next
}

fn map_action(action: Action, rotation: Rotation, side: usize) -> Action {
    match action {
        Action::MoveCard { card, to } => Action::MoveCard { card, to: rotation.apply(to, side) },
        Action::PlaceHint { hint, target: HintTarget::Cell(cell) } => {
            Action::PlaceHint { hint, target: HintTarget::Cell(rotation.apply(cell, side)) }
        }
        other => other,
    }
}

/// Map an action chosen in the agent frame back into the true frame.
pub fn transform_action_to_env(action: Action, sym: &Symmetry, side: usize) -> Action {
    map_action(action, sym.rotation.inverse(), side)
}

/// Map a true-frame action into the agent frame.
pub fn transform_action_to_agent(action: Action, sym: &Symmetry, side: usize) -> Action {
    map_action(action, sym.rotation, side)
}

pub fn index_to_env(index: usize, sym: &Symmetry, layout: &ActionLayout) -> Result<usize> {
    layout.encode(&transform_action_to_env(layout.decode(index)?, sym, layout.grid_side))
}

pub fn index_to_agent(index: usize, sym: &Symmetry, layout: &ActionLayout) -> Result<usize> {
    layout.encode(&transform_action_to_agent(layout.decode(index)?, sym, layout.grid_side))
}

/// Re-express a true-frame legality mask in the agent frame.
pub fn mask_to_agent(mask: &ActionMask, sym: &Symmetry, layout: &ActionLayout) -> ActionMask {
    ActionMask::from_indices(
        mask.len(),
        mask.iter_set().map(|i| index_to_agent(i, sym, layout).expect("legal indices decode")),
    )
}

fn remap_position(features: &mut [f32], side: usize, rotation: Rotation) {
    if features[0] < 0.0 {
        return;
    }
    let scale = (side - 1) as f32;
    let cell = Cell::new((features[0] * scale).round() as u8, (features[1] * scale).round() as u8);
    let moved = rotation.apply(cell, side);
    features[0] = moved.row as f32 / scale;
    features[1] = moved.col as f32 / scale;
}

fn permute_block(block: &mut [f32], perm: &[u8]) {
    let old: Vec<f32> = block.to_vec();
    for (c, &p) in perm.iter().enumerate() {
        block[p as usize] = old[c];
    }
}

/// Express an observation of the true frame in the agent frame of `sym`.
pub fn transform_observation(obs: &Observation, sym: &Symmetry) -> Observation {
    let k = sym.colour_perm.len();
    match obs {
        Observation::Graph(g) => {
            let mut out = g.clone();
            for node in out.features.chunks_exact_mut(g.feature_dim) {
                permute_block(&mut node[..k], &sym.colour_perm);
                remap_position(&mut node[k..k + 2], g.grid_side, sym.rotation);
            }
            Observation::Graph(out)
        }
        Observation::Image(img) => {
            let side = img.height;
            let ch = img.channels;
            let mut data = vec![0.0f32; img.data.len()];
            for row in 0..side {
                for col in 0..img.width {
                    let from = (row * img.width + col) * ch;
                    let dest = if col == side {
                        (row, col)
                    } else {
                        let moved = sym.rotation.apply(Cell::new(row as u8, col as u8), side);
                        (moved.row as usize, moved.col as usize)
                    };
                    let to = (dest.0 * img.width + dest.1) * ch;
                    let px = &mut data[to..to + ch];
                    px.copy_from_slice(&img.data[from..from + ch]);
                    if px.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    permute_block(&mut px[..k], &sym.colour_perm);
                    permute_block(&mut px[k..2 * k], &sym.colour_perm);
                    remap_position(&mut px[2 * k..2 * k + 2], side, sym.rotation);
                }
            }
            Observation::Image(ImageObservation { data, ..img.clone() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::{observe, Encoding, MemoryMode};

    #[test]
    fn rotation_maps() {
        assert_eq!(Rotation::R90.apply(Cell::new(0, 0), 9), Cell::new(0, 8));
        assert_eq!(Rotation::R90.inverse().apply(Cell::new(0, 8), 9), Cell::new(0, 0));
        for rot in Rotation::ALL {
            for i in 0..81 {
                let c = Cell::from_index(i, 9);
                assert_eq!(rot.inverse().apply(rot.apply(c, 9), 9), c);
            }
        }
        let a = Action::MoveCard { card: 2, to: Cell::new(0, 8) };
        let sym = Symmetry { colour_perm: vec![0, 1, 2], rotation: Rotation::R90 };
        assert_eq!(transform_action_to_env(a, &sym, 9), Action::MoveCard { card: 2, to: Cell::new(0, 0) });
    }

    #[test]
    fn inverse_and_compose() {
        let sym = Symmetry { colour_perm: vec![2, 0, 1], rotation: Rotation::R270 };
        assert!(sym.then(&sym.inverse()).is_identity());
        assert!(sym.inverse().then(&sym).is_identity());
        assert_eq!(sym.map_colour_mask(0b011), 0b101);
    }

    #[test]
    fn identity_and_double_half_turn() {
        let s = GameState::new(GameConfig::two_player_3x3(), 4).unwrap();
        let half = Symmetry { colour_perm: vec![0, 1, 2], rotation: Rotation::R180 };
        for enc in [Encoding::Graph, Encoding::Image] {
            let obs = observe(&s, 0, MemoryMode::Perfect, enc);
            assert_eq!(transform_observation(&obs, &Symmetry::identity(3)), obs);
            assert_eq!(transform_observation(&transform_observation(&obs, &half), &half), obs);
        }
    }

    #[test]
    fn none_mode_is_identity() {
        let config = GameConfig::two_player_3x3();
        assert!(sample_symmetries(&config, SymmetryMode::None, 3).iter().all(Symmetry::is_identity));
        let a = sample_symmetries(&config, SymmetryMode::ColourAndRotation, 3);
        assert_eq!(a, sample_symmetries(&config, SymmetryMode::ColourAndRotation, 3));
        assert!(sample_symmetries(&config, SymmetryMode::ColourOnly, 9).iter().all(|s| s.rotation == Rotation::R0));
    }
}
