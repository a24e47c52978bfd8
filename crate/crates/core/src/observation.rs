//! Per-seat views of the game under hidden information.
//!
//! [`SeatView`] is the structured form: it contains only what one seat may
//! know, so every tensor encoding derived from it is private by construction.
//!
//! Graph node features, `f = |C| + 7` per node, cards first then hints:
//!
//! | slot | meaning |
//! |---|---|
//! | `0..|C|` | colour one-hot (cards) or multi-hot (hints); zero when hidden |
//! | `|C|`, `|C|+1` | row and column divided by `g - 1`; `-1, -1` for unplaced hints |
//! | `|C|+2` | locked (cards) or placed (hints) |
//! | `|C|+3` | seen code: 0 none, 1/3 others only, 2/3 observer only, 1 both |
//! | `|C|+4` | id, `(i + 1) / |Y|` for cards and `(j + 1) / |H|` for hints |
//! | `|C|+5` | 1 when the observer is the current player |
//! | `|C|+6` | substep number divided by 4 |
//!
//! Image tensors are `g x (g + 1) x (2|C| + 7)`, row-major with channels last.
//! Channels: card colour `0..|C|`, hint colour `|C|..2|C|`, then row, column,
//! locked, seen, current player, substep and id. Card features sit at the
//! card's cell; hint `j` sits at row `j` of the extra column `g`.

use serde::{Deserialize, Serialize};

use crate::board::Cell;
use crate::config::GameConfig;
use crate::game::{GameState, HintStatus, Outcome, Substep};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    /// Card colours are visible only to the current player, for the cards
    /// peeked during the current turn.
    #[default]
    Standard,
    /// Every card the observer has peeked this episode stays visible.
    Perfect,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    Graph,
    Image,
}

impl std::str::FromStr for MemoryMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "perfect" => Ok(Self::Perfect),
            other => Err(crate::Error::Config(format!("unknown memory mode {other:?}"))),
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "graph" => Ok(Self::Graph),
            "image" => Ok(Self::Image),
            other => Err(crate::Error::Config(format!("unknown encoding {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardView {
    pub id: usize,
    pub position: Cell,
    pub locked: bool,
    pub colour: Option<u8>,
    pub peeked_by_self: bool,
    pub peeked_by_others: bool,
}

impl CardView {
    pub fn seen_code(&self) -> f32 {
        match (self.peeked_by_self, self.peeked_by_others) {
            (false, false) => 0.0,
            (false, true) => 1.0 / 3.0,
            (true, false) => 2.0 / 3.0,
            (true, true) => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintView {
    pub id: usize,
    pub status: HintStatus,
    /// Colour bitmask; `None` while face down.
    pub colours: Option<u8>,
    pub placed_on: Option<usize>,
}

/// Everything one seat is allowed to know about a game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatView {
    pub config: GameConfig,
    pub seat: usize,
    pub memory_mode: MemoryMode,
    pub current_player: usize,
    pub substep: Substep,
    /// Cards the current player has peeked this turn. Which cards are
    /// inspected is public; their colours are not.
    pub peeked_this_turn: Vec<usize>,
    pub cards: Vec<CardView>,
    pub hints: Vec<HintView>,
    /// Adjacency rows as card bitmasks.
    pub adjacency: Vec<u16>,
    pub step: u32,
    pub max_steps: usize,
    pub terminal: bool,
    pub outcome: Option<Outcome>,
}

impl SeatView {
    pub fn new(state: &GameState, seat: usize, mode: MemoryMode) -> Self {
        let board = state.board();
        let phase = state.phase();
        let acting = seat == state.current_player() && !state.is_terminal();
        let peeked_now = phase.peeked_mask();
        let others_mask = !(1u8 << seat);
        let cards = (0..board.num_cards())
            .map(|i| {
                let locked = board.is_locked(i);
                let visible = match mode {
                    MemoryMode::Perfect => state.has_peeked(seat, i),
                    MemoryMode::Standard => acting && peeked_now >> i & 1 == 1 && !locked,
                };
                CardView {
                    id: i,
                    position: board.position(i),
                    locked,
                    colour: visible.then(|| board.colour(i)),
                    peeked_by_self: state.has_peeked(seat, i),
                    peeked_by_others: state.team_peeked(i) & others_mask != 0,
                }
            })
            .collect();
        let hints = state
            .hints()
            .iter()
            .enumerate()
            .map(|(j, h)| HintView {
                id: j,
                status: h.status,
                colours: (h.status != HintStatus::FaceDown).then_some(h.colours),
                placed_on: h.placed_on,
            })
            .collect();
        Self {
            config: *state.config(),
            seat,
            memory_mode: mode,
            current_player: state.current_player(),
            substep: state.substep(),
            peeked_this_turn: phase.peeked().iter().map(|&c| c as usize).collect(),
            cards,
            hints,
            adjacency: board.adjacency().to_vec(),
            step: state.step_count(),
            max_steps: state.config().max_episode_length(),
            terminal: state.is_terminal(),
            outcome: state.outcome(),
        }
    }

    pub fn is_acting(&self) -> bool {
        !self.terminal && self.current_player == self.seat
    }

    /// Colours this seat can currently see, per card.
    pub fn visible_colours(&self) -> Vec<Option<u8>> {
        self.cards.iter().map(|c| c.colour).collect()
    }

    pub fn card_at(&self, cell: Cell) -> Option<usize> {
        self.cards.iter().position(|c| c.position == cell)
    }

    pub fn encode(&self, encoding: Encoding) -> Observation {
        match encoding {
            Encoding::Graph => Observation::Graph(self.graph()),
            Encoding::Image => Observation::Image(self.image()),
        }
    }

    fn common(&self) -> [f32; 2] {
        [f32::from(u8::from(self.is_acting())), f32::from(self.substep.number()) / 4.0]
    }

    fn norm(&self, v: u8) -> f32 {
        v as f32 / (self.config.grid_side() - 1) as f32
    }

    fn hint_position(&self, hint: &HintView) -> [f32; 2] {
        match hint.placed_on {
            Some(card) => {
                let p = self.cards[card].position;
                [self.norm(p.row), self.norm(p.col)]
            }
            None => [-1.0, -1.0],
        }
    }

    fn graph(&self) -> GraphObservation {
        let n = self.cards.len();
        let h = self.hints.len();
        let k = self.config.num_colours();
        let f = graph_feature_dim(&self.config);
        let [acting, substep] = self.common();
        let mut features = vec![0.0f32; (n + h) * f];
        for (card, row) in self.cards.iter().zip(features.chunks_exact_mut(f)) {
            if let Some(c) = card.colour {
                row[c as usize] = 1.0;
            }
            row[k] = self.norm(card.position.row);
            row[k + 1] = self.norm(card.position.col);
            row[k + 2] = f32::from(u8::from(card.locked));
            row[k + 3] = card.seen_code();
            row[k + 4] = (card.id + 1) as f32 / n as f32;
            row[k + 5] = acting;
            row[k + 6] = substep;
        }
        for (hint, row) in self.hints.iter().zip(features[n * f..].chunks_exact_mut(f)) {
            for (c, slot) in row[..k].iter_mut().enumerate() {
                if hint.colours.is_some_and(|m| m >> c & 1 == 1) {
                    *slot = 1.0;
                }
            }
            let [r, col] = self.hint_position(hint);
            row[k] = r;
            row[k + 1] = col;
            row[k + 2] = f32::from(u8::from(hint.status == HintStatus::Placed));
            row[k + 4] = (hint.id + 1) as f32 / h as f32;
            row[k + 5] = acting;
            row[k + 6] = substep;
        }
        let mut adjacency = vec![0u8; n * n];
        for (i, mask) in self.adjacency.iter().enumerate() {
            for j in 0..n {
                adjacency[i * n + j] = (mask >> j & 1) as u8;
            }
        }
        GraphObservation { grid_side: self.config.grid_side(), num_cards: n, num_hints: h, feature_dim: f, adjacency, features }
    }

    fn image(&self) -> ImageObservation {
        let g = self.config.grid_side();
        let k = self.config.num_colours();
        let ch = image_channels(&self.config);
        let n = self.cards.len();
        let h = self.hints.len();
        let [acting, substep] = self.common();
        let width = g + 1;
        let mut data = vec![0.0f32; g * width * ch];
        let base = 2 * k;
        for card in &self.cards {
            let at = (card.position.row as usize * width + card.position.col as usize) * ch;
            let px = &mut data[at..at + ch];
            if let Some(c) = card.colour {
                px[c as usize] = 1.0;
            }
            px[base] = self.norm(card.position.row);
            px[base + 1] = self.norm(card.position.col);
            px[base + 2] = f32::from(u8::from(card.locked));
            px[base + 3] = card.seen_code();
            px[base + 4] = acting;
            px[base + 5] = substep;
            px[base + 6] = (card.id + 1) as f32 / n as f32;
        }
        for hint in &self.hints {
            let at = (hint.id * width + g) * ch;
            let px = &mut data[at..at + ch];
            for c in 0..k {
                if hint.colours.is_some_and(|m| m >> c & 1 == 1) {
                    px[k + c] = 1.0;
                }
            }
            let [r, col] = self.hint_position(hint);
            px[base] = r;
            px[base + 1] = col;
            px[base + 2] = f32::from(u8::from(hint.status == HintStatus::Placed));
            px[base + 4] = acting;
            px[base + 5] = substep;
            px[base + 6] = (hint.id + 1) as f32 / h as f32;
        }
        ImageObservation { height: g, width, channels: ch, data }
    }
}

pub fn graph_feature_dim(config: &GameConfig) -> usize {
    config.num_colours() + 7
}

pub fn image_channels(config: &GameConfig) -> usize {
    2 * config.num_colours() + 7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphObservation {
    pub grid_side: usize,
    pub num_cards: usize,
    pub num_hints: usize,
    pub feature_dim: usize,
    /// Row-major `|Y| x |Y|` 0/1 matrix.
    pub adjacency: Vec<u8>,
    /// Row-major `(|Y| + |H|) x f` node features.
    pub features: Vec<f32>,
}

impl GraphObservation {
    pub fn node(&self, index: usize) -> &[f32] {
        &self.features[index * self.feature_dim..(index + 1) * self.feature_dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageObservation {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Row-major `height x width x channels`.
    pub data: Vec<f32>,
}

impl ImageObservation {
    pub fn pixel(&self, row: usize, col: usize) -> &[f32] {
        let at = (row * self.width + col) * self.channels;
        &self.data[at..at + self.channels]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum Observation {
    Graph(GraphObservation),
    Image(ImageObservation),
}

impl Observation {
    pub fn encoding(&self) -> Encoding {
        match self {
            Observation::Graph(_) => Encoding::Graph,
            Observation::Image(_) => Encoding::Image,
        }
    }

    /// Shape of the feature tensor returned by [`Observation::data`].
    pub fn shape(&self) -> Vec<usize> {
        match self {
            Observation::Graph(g) => vec![g.num_cards + g.num_hints, g.feature_dim],
            Observation::Image(i) => vec![i.height, i.width, i.channels],
        }
    }

    pub fn data(&self) -> &[f32] {
        match self {
            Observation::Graph(g) => &g.features,
            Observation::Image(i) => &i.data,
        }
    }

    pub fn adjacency(&self) -> Option<&[u8]> {
        match self {
            Observation::Graph(g) => Some(&g.adjacency),
            Observation::Image(_) => None,
        }
    }

    /// Size of the trailing feature axis.
    pub fn feature_width(&self) -> usize {
        *self.shape().last().expect("shapes are never empty")
    }

    /// Concatenate observations along the feature axis.
    pub fn concat_features(parts: &[Observation]) -> Observation {
        let first = &parts[0];
        let width: usize = parts.iter().map(Observation::feature_width).sum();
        let rows = first.data().len() / first.feature_width();
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for p in parts {
                let w = p.feature_width();
                data.extend_from_slice(&p.data()[r * w..(r + 1) * w]);
            }
        }
        match first {
            Observation::Graph(g) => Observation::Graph(GraphObservation {
                feature_dim: width,
                features: data,
                ..g.clone()
            }),
            Observation::Image(i) => {
                Observation::Image(ImageObservation { height: i.height, width: i.width, channels: width, data })
            }
        }
    }

    /// Slice feature block `index` of width `block` out of a concatenation.
    pub fn feature_block(&self, index: usize, block: usize) -> Observation {
        let w = self.feature_width();
        let rows = self.data().len() / w;
        let mut data = Vec::with_capacity(rows * block);
        for r in 0..rows {
            data.extend_from_slice(&self.data()[r * w + index * block..r * w + (index + 1) * block]);
        }
        match self {
            Observation::Graph(g) => {
                Observation::Graph(GraphObservation { feature_dim: block, features: data, ..g.clone() })
            }
            Observation::Image(i) => {
                Observation::Image(ImageObservation { height: i.height, width: i.width, channels: block, data })
            }
        }
    }
}

pub fn observe(state: &GameState, agent: usize, mode: MemoryMode, encoding: Encoding) -> Observation {
    SeatView::new(state, agent, mode).encode(encoding)
}

/// All seats' observations concatenated along the feature axis in seat order.
pub fn world_state(state: &GameState, mode: MemoryMode, encoding: Encoding) -> Observation {
    let parts: Vec<Observation> =
        (0..state.config().num_players).map(|a| observe(state, a, mode, encoding)).collect();
    Observation::concat_features(&parts)
}
