//! Static rules parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MAX_PLAYERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "3x3")]
    ThreeByThree,
    #[serde(rename = "4x4")]
    FourByFour,
}

impl Variant {
    /// Side of the starting block; also the number of colours and the
    /// number of cards per colour.
    pub fn k(self) -> usize {
        match self {
            Variant::ThreeByThree => 3,
            Variant::FourByFour => 4,
        }
    }

    pub fn grid_side(self) -> usize {
        match self {
            Variant::ThreeByThree => 9,
            Variant::FourByFour => 10,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::ThreeByThree => "3x3",
            Variant::FourByFour => "4x4",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3x3" => Ok(Variant::ThreeByThree),
            "4x4" => Ok(Variant::FourByFour),
            other => Err(Error::Config(format!("unknown variant {other:?} (expected 3x3 or 4x4)"))),
        }
    }
}

/// Number of hint cards per colour-set size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HintDeckSpec {
    pub one_colour: usize,
    pub two_colour: usize,
    pub three_colour: usize,
}

impl HintDeckSpec {
    /// The standard deck for a variant and player count.
    pub fn standard(variant: Variant, num_players: usize) -> Result<Self> {
        let (one, two, three) = match (variant, num_players) {
            (Variant::FourByFour, 2) => (2, 3, 2),
            (Variant::FourByFour, 3) => (2, 4, 3),
            (Variant::FourByFour, 4) => (3, 4, 3),
            (Variant::ThreeByThree, 2) => (1, 3, 0),
            (Variant::ThreeByThree, 3) => (2, 3, 0),
            (Variant::ThreeByThree, 4) => (3, 3, 0),
            (_, n) => return Err(Error::Config(format!("{n} players is not supported (2-4)"))),
        };
        Ok(Self { one_colour: one, two_colour: two, three_colour: three })
    }

    pub fn total(&self) -> usize {
        self.one_colour + self.two_colour + self.three_colour
    }

    /// Counts indexed by colour-set size (index 0 is one colour).
    pub fn by_size(&self) -> [usize; 3] {
        [self.one_colour, self.two_colour, self.three_colour]
    }
}

/// How `PlaceHint` addresses its target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HintTargetIndexing {
    /// One action per grid cell; the cell resolves to the card occupying it.
    #[default]
    Cell,
    /// One action per card.
    Card,
}

impl FromStr for HintTargetIndexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell" => Ok(Self::Cell),
            "card" => Ok(Self::Card),
            other => Err(Error::Config(format!("unknown hint target indexing {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pub variant: Variant,
    pub num_players: usize,
    pub hint_deck: HintDeckSpec,
    #[serde(default)]
    pub hint_target_indexing: HintTargetIndexing,
}

impl GameConfig {
    /// Standard rules for `variant` with `num_players` players.
    pub fn new(variant: Variant, num_players: usize) -> Result<Self> {
        let config = Self {
            variant,
            num_players,
            hint_deck: HintDeckSpec::standard(variant, num_players)?,
            hint_target_indexing: HintTargetIndexing::Cell,
        };
        config.validate()?;
        Ok(config)
    }

    /// The 2-player 3x3 game used throughout the evaluation setup.
    pub fn two_player_3x3() -> Self {
        Self::new(Variant::ThreeByThree, 2).expect("standard config is valid")
    }

    pub fn with_hint_indexing(mut self, indexing: HintTargetIndexing) -> Self {
        self.hint_target_indexing = indexing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_PLAYERS).contains(&self.num_players) {
            return Err(Error::Config(format!(
                "{} players is not supported (2-{MAX_PLAYERS})",
                self.num_players
            )));
        }
        let k = self.variant.k();
        let deck = self.hint_deck.by_size();
        for (size_minus_one, &count) in deck.iter().enumerate() {
            let size = size_minus_one + 1;
            let available = if size >= k { 0 } else { binomial(k, size) };
            if count > available {
                return Err(Error::Config(format!(
                    "{count} hints of {size} colour(s) requested but only {available} distinct \
                     colour sets exist for {}",
                    self.variant
                )));
            }
        }
        if self.hint_deck.total() == 0 {
            return Err(Error::Config("the hint deck is empty".into()));
        }
        // Every hint can lock one card; at least two cards must remain
        // observable so the second peek of a turn always has a target.
        if self.hint_deck.total() + 2 > self.num_cards() {
            return Err(Error::Config("hint deck is too large for the board".into()));
        }
        Ok(())
    }

    pub fn num_cards(&self) -> usize {
        self.variant.k() * self.variant.k()
    }

    pub fn num_colours(&self) -> usize {
        self.variant.k()
    }

    pub fn grid_side(&self) -> usize {
        self.variant.grid_side()
    }

    pub fn num_cells(&self) -> usize {
        self.grid_side() * self.grid_side()
    }

    pub fn num_hints(&self) -> usize {
        self.hint_deck.total()
    }

    /// Each hint needs a reveal and a placement turn of four substeps each.
    pub fn max_episode_length(&self) -> usize {
        8 * self.num_hints()
    }

    /// First row/column of the centred starting block.
    pub fn start_offset(&self) -> usize {
        (self.grid_side() - self.variant.k()) / 2
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
