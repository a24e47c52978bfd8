//! Aggregate evaluation metrics over finished episodes.

use serde::{Deserialize, Serialize};

use crate::vec_env::EpisodeSummary;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    pub aborted: usize,
    /// Mean terminal team reward without shaping.
    pub reward_mean: f64,
    /// Population standard deviation of the terminal reward.
    pub reward_std: f64,
    pub success_rate: f64,
    /// Mean number of complete colour clusters at the end.
    pub mean_clusters: f64,
    /// Fraction of episodes that were ended early and won.
    pub successful_early_end: f64,
    pub mean_length: f64,
}

impl Metrics {
    pub fn from_summaries(summaries: &[EpisodeSummary], aborted: usize) -> Self {
        let n = summaries.len();
        if n == 0 {
            return Self { aborted, ..Self::default() };
        }
        let nf = n as f64;
        let mean = |f: &dyn Fn(&EpisodeSummary) -> f64| summaries.iter().map(f).sum::<f64>() / nf;
        let reward_mean = mean(&|s| s.terminal_reward);
        let variance = mean(&|s| (s.terminal_reward - reward_mean).powi(2));
        Self {
            episodes: n,
            aborted,
            reward_mean,
            reward_std: variance.sqrt(),
            success_rate: mean(&|s| f64::from(u8::from(s.won))),
            mean_clusters: mean(&|s| s.complete_clusters as f64),
            successful_early_end: mean(&|s| f64::from(u8::from(s.won && s.ended_early))),
            mean_length: mean(&|s| f64::from(s.length)),
        }
    }
}

/// Aligned text table, one row per labelled metrics entry.
pub fn metrics_table(rows: &[(String, Metrics)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(8);
    let mut out = format!(
        "{:<width$} {:>8} {:>7} {:>16} {:>7} {:>6} {:>7} {:>7}\n",
        "matchup", "episodes", "aborted", "R", "SR", "NC", "SEE", "length"
    );
    for (label, m) in rows {
        out.push_str(&format!(
            "{:<width$} {:>8} {:>7} {:>16} {:>7.3} {:>6.2} {:>7.3} {:>7.2}\n",
            label,
            m.episodes,
            m.aborted,
            format!("{:.2} ± {:.2}", m.reward_mean, m.reward_std),
            m.success_rate,
            m.mean_clusters,
            m.successful_early_end,
            m.mean_length
        ));
    }
    out
}
