//! Evaluation harness: matchups, cross-play, the diagnostic and exports.

pub mod crossplay;
pub mod diagnostic;
pub mod export;
pub mod matchup;
pub mod metrics;
pub mod record;

pub use crossplay::{cross_play, cross_play_with, sp_xp_gap, CrossPlayMatrix};
pub use diagnostic::{evaluate_diagnostic, DiagnosticReport, DiagnosticScenario};
pub use export::{export_probing_dataset, ProbeRow};
pub use matchup::{run_matchup, MatchupConfig, MatchupResult};
pub use metrics::{metrics_table, Metrics};
pub use record::{EpisodeRecord, StepRecord};
