mod common;

use std::path::PathBuf;

use yle_core::agents::external::Handshake;
use yle_core::agents::{GreedyAgent, MemoryOracle, Policy, PolicySpec, RandomAgent};
use yle_core::harness::crossplay::cross_play;
use yle_core::harness::diagnostic::{evaluate_diagnostic, fixture_file, load_fixtures, FixtureFile, Ranks};
use yle_core::harness::export::{export_probing_dataset, read_probe_rows, ExportOptions};
use yle_core::harness::matchup::{run_matchup, MatchupConfig};
use yle_core::harness::metrics::Metrics;
use yle_core::harness::record::read_records;
use yle_core::symmetry::SymmetryMode;
use yle_core::vec_env::EpisodeSummary;
use yle_core::GameConfig;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Compare `text` with a checked-in fixture; `YLE_BLESS=1` rewrites it.
fn golden(name: &str, text: &str) {
    let path = fixture(name);
    if std::env::var_os("YLE_BLESS").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let stored = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing fixture {}", path.display()));
    assert_eq!(stored, text, "fixture {name} is stale; rerun with YLE_BLESS=1");
}

#[test]
fn diagnostic_fixture_file_is_current() {
    let text = serde_json::to_string_pretty(&fixture_file().unwrap()).unwrap() + "\n";
    golden("diagnostic.json", &text);
    let parsed: FixtureFile = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.scenarios.len(), 24);
    assert_eq!(load_fixtures(&fixture("diagnostic.json")).unwrap(), parsed.scenarios);
}

#[test]
fn greedy_diagnostic_ranks_are_recorded() {
    let scenarios = load_fixtures(&fixture("diagnostic.json")).unwrap();
    let report = evaluate_diagnostic(&mut GreedyAgent, &scenarios, 0).unwrap();
    let r: Ranks = report.ranks;
    assert!(r.t0.is_finite() && r.t1.is_finite() && r.wrong.is_finite());
    let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
    golden("diagnostic_greedy.json", &text);
}

#[test]
fn crossplay_greedy_dominates_mixed_cells() {
    let game = GameConfig::two_player_3x3();
    let pool = [PolicySpec::Greedy, PolicySpec::Random];
    let m = cross_play(&pool, &MatchupConfig::new(game, 200, 3), &Handshake::new(game)).unwrap();
    let sr = m.success_rates();
    assert!(sr[0][0] > sr[0][1] && sr[0][0] > sr[1][0], "{sr:?}");
    assert!(m.table().contains("SP-XP gap"));
}

#[test]
fn records_replay_and_metrics_recompute() {
    let mut seats: Vec<Box<dyn Policy>> = vec![Box::new(GreedyAgent), Box::new(RandomAgent)];
    let mut setup = MatchupConfig::new(GameConfig::two_player_3x3(), 40, 8);
    setup.record = true;
    setup.symmetry = SymmetryMode::ColourAndRotation;
    let result = run_matchup(&mut seats, &setup).unwrap();
    let text: String = result.records.iter().map(|r| r.to_json_line() + "\n").collect();
    let parsed = read_records(&text).unwrap();
    assert_eq!(parsed, result.records);
    let summaries: Vec<EpisodeSummary> = parsed
        .iter()
        .map(|r| {
            let states = r.replay_states().unwrap();
            EpisodeSummary::of(states.last().unwrap()).unwrap()
        })
        .collect();
    assert_eq!(Metrics::from_summaries(&summaries, 0), result.metrics);
    let m = result.metrics;
    assert!(0.0 <= m.successful_early_end && m.successful_early_end <= m.success_rate && m.success_rate <= 1.0);
    assert!(m.mean_clusters >= 0.0 && m.mean_clusters <= 3.0);
}

#[test]
fn probe_export_has_one_row_per_step_and_agent() {
    let mut seats: Vec<Box<dyn Policy>> = vec![Box::new(RandomAgent), Box::new(RandomAgent)];
    let mut setup = MatchupConfig::new(GameConfig::two_player_3x3(), 30, 1);
    setup.record = true;
    let records = run_matchup(&mut seats, &setup).unwrap().records;
    let full = records.iter().find(|r| r.steps.len() == 32).expect("some random episode runs to the bound").clone();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.jsonl");
    assert_eq!(export_probing_dataset(&[full], &path, ExportOptions::default()).unwrap(), 64);
    let rows = read_probe_rows(&path).unwrap();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.card_colours.len() == 9 && r.knowledge.len() == 9));
}

#[test]
fn oracle_knowledge_never_shrinks() {
    let mut seats: Vec<Box<dyn Policy>> = vec![Box::new(MemoryOracle::default()), Box::new(MemoryOracle::default())];
    let mut setup = MatchupConfig::new(GameConfig::two_player_3x3(), 50, 2);
    setup.record = true;
    for record in run_matchup(&mut seats, &setup).unwrap().records {
        for agent in 0..2 {
            let mut previous = 0;
            for step in &record.steps {
                let known = step.knowledge[agent].iter().filter(|k| k.is_some()).count();
                assert!(known >= previous);
                previous = known;
            }
        }
    }
}
