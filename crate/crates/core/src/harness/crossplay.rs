//! Cross-play matrices over a pool of policies.
//!
//! Cell `(i, j)` seats pool member `i` at seat 0 and member `j` at every other
//! seat. The diagonal is self-play. Every cell plays the same seeded deals.

use serde::{Deserialize, Serialize};

use super::matchup::{run_matchup, MatchupConfig};
use super::metrics::{metrics_table, Metrics};
use crate::agents::external::Handshake;
use crate::agents::{Policy, PolicySpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPlayMatrix {
    pub names: Vec<String>,
    /// `cells[i][j]`: member `i` at seat 0, member `j` elsewhere.
    pub cells: Vec<Vec<Metrics>>,
    /// Mean self-play success rate minus mean cross-play success rate.
    pub gap: f64,
}

/// Mean of the diagonal minus mean of the off-diagonal entries.
pub fn sp_xp_gap(success: &[Vec<f64>]) -> f64 {
    let n = success.len();
    if n < 2 {
        return 0.0;
    }
    let diagonal: f64 = (0..n).map(|i| success[i][i]).sum::<f64>() / n as f64;
    let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| success[i][j]).sum();
    diagonal - off / (n * (n - 1)) as f64
}

impl CrossPlayMatrix {
    pub fn success_rates(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|row| row.iter().map(|m| m.success_rate).collect()).collect()
    }

    pub fn table(&self) -> String {
        let mut rows = Vec::new();
        for (i, row) in self.cells.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                rows.push((format!("{} + {}", self.names[i], self.names[j]), *m));
            }
        }
        let mut out = metrics_table(&rows);
        out.push_str(&format!("SP-XP gap (SR): {:.3}\n", self.gap));
        out
    }
}

/// Cross-play with policies built by `factory(pool_index, seat)`. Fresh
/// instances are built for every cell.
pub fn cross_play_with(
    names: &[String],
    mut factory: impl FnMut(usize, usize) -> Result<Box<dyn Policy>>,
    setup: &MatchupConfig,
) -> Result<CrossPlayMatrix> {
    let n = names.len();
    if n < 2 {
        return Err(Error::Config("cross-play needs at least two policies".into()));
    }
    let players = setup.game.num_players;
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut seats = (0..players)
                .map(|seat| factory(if seat == 0 { i } else { j }, seat))
                .collect::<Result<Vec<_>>>()?;
            row.push(run_matchup(&mut seats, setup)?.metrics);
        }
        cells.push(row);
    }
    let mut matrix = CrossPlayMatrix { names: names.to_vec(), cells, gap: 0.0 };
    matrix.gap = sp_xp_gap(&matrix.success_rates());
    Ok(matrix)
}

pub fn cross_play(pool: &[PolicySpec], setup: &MatchupConfig, handshake: &Handshake) -> Result<CrossPlayMatrix> {
    let names: Vec<String> = pool.iter().map(|p| p.to_string()).collect();
    cross_play_with(&names, |i, seat| pool[i].build(seat, handshake), setup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GameConfig;

    #[test]
    fn gap_on_fixture_matrix() {
        let m = vec![vec![0.8, 0.2, 0.1], vec![0.3, 0.6, 0.0], vec![0.2, 0.2, 1.0]];
        let expected = (0.8 + 0.6 + 1.0) / 3.0 - (0.2 + 0.1 + 0.3 + 0.0 + 0.2 + 0.2) / 6.0;
        assert!((sp_xp_gap(&m) - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_deterministic_policies_have_no_gap() {
        let pool = [PolicySpec::Greedy, PolicySpec::Greedy];
        let game = GameConfig::two_player_3x3();
        let matrix = cross_play(&pool, &MatchupConfig::new(game, 30, 11), &Handshake::new(game)).unwrap();
        let first = matrix.cells[0][0];
        assert!(matrix.cells.iter().flatten().all(|m| *m == first));
        assert_eq!(matrix.gap, 0.0);
        assert!(matrix.table().contains("greedy + greedy"));
    }

    #[test]
    fn pool_must_have_two_members() {
        let game = GameConfig::two_player_3x3();
        assert!(cross_play(&[PolicySpec::Random], &MatchupConfig::new(game, 1, 0), &Handshake::new(game)).is_err());
    }
}
