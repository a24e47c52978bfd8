//! Probing dataset export: one JSON line per (episode, step, agent).
//!
//! Each row carries the ground-truth colour of every card and what the agent
//! has seen of it after the step, which is what a per-card probe is trained
//! to predict. The observation itself is referenced by
//! `(episode, step, agent)` and can be embedded on request.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::EpisodeRecord;
use crate::error::{Error, Result};
use crate::game::Substep;
use crate::observation::{observe, Encoding, MemoryMode};

pub const PROBE_SCHEMA: &str = "yle-probe/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationRef {
    pub episode: u64,
    /// Index of the step after which the observation is taken.
    pub step: u32,
    pub agent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub schema: String,
    pub config_digest: String,
    pub observation: ObservationRef,
    pub acting_agent: usize,
    pub substep: Substep,
    pub action: usize,
    pub card_colours: Vec<u8>,
    /// `None` where the agent has not seen the card.
    pub knowledge: Vec<Option<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Embed the agent's observation after each step in this encoding.
    pub embed: Option<(Encoding, MemoryMode)>,
}

pub fn probe_rows(record: &EpisodeRecord, options: ExportOptions) -> Result<Vec<ProbeRow>> {
    let states = record.replay_states()?;
    let players = record.config.num_players;
    let mut rows = Vec::with_capacity(record.steps.len() * players);
    for (i, step) in record.steps.iter().enumerate() {
        let after = &states[i + 1];
        for agent in 0..players {
            let (features, shape) = match options.embed {
                Some((encoding, mode)) => {
                    let obs = observe(after, agent, mode, encoding);
                    (Some(obs.data().to_vec()), Some(obs.shape()))
                }
                None => (None, None),
            };
            rows.push(ProbeRow {
                schema: PROBE_SCHEMA.into(),
                config_digest: record.config_digest.clone(),
                observation: ObservationRef { episode: record.episode, step: step.step, agent },
                acting_agent: step.agent,
                substep: step.substep,
                action: step.action,
                card_colours: record.card_colours.clone(),
                knowledge: step.knowledge[agent].clone(),
                features,
                shape,
            });
        }
    }
    Ok(rows)
}

/// Write the probing rows of every record to `path`. Returns the row count.
pub fn export_probing_dataset(records: &[EpisodeRecord], path: &Path, options: ExportOptions) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let mut count = 0;
    for record in records {
        for row in probe_rows(record, options)? {
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
            count += 1;
        }
    }
    out.flush()?;
    Ok(count)
}

pub fn read_probe_rows(path: &Path) -> Result<Vec<ProbeRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ProbeRow = serde_json::from_str(&line)?;
        if row.schema != PROBE_SCHEMA {
            return Err(Error::Replay(format!("unknown probe schema {:?}", row.schema)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MemoryOracle, Policy, RandomAgent};
    use crate::config::GameConfig;
    use crate::harness::matchup::{run_matchup, MatchupConfig};

    fn records(episodes: usize) -> Vec<EpisodeRecord> {
        let mut seats: Vec<Box<dyn Policy>> = vec![Box::new(MemoryOracle::default()), Box::new(RandomAgent)];
        let mut setup = MatchupConfig::new(GameConfig::two_player_3x3(), episodes, 9);
        setup.record = true;
        run_matchup(&mut seats, &setup).unwrap().records
    }

    #[test]
    fn one_row_per_step_and_agent() {
        let recs = records(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probe.jsonl");
        let n = export_probing_dataset(&recs, &path, ExportOptions::default()).unwrap();
        let expected: usize = recs.iter().map(|r| r.steps.len() * 2).sum();
        assert_eq!(n, expected);
        let rows = read_probe_rows(&path).unwrap();
        assert_eq!(rows.len(), n);
        assert!(rows.iter().all(|r| r.knowledge.len() == 9 && r.card_colours.len() == 9));
    }

    #[test]
    fn embedded_observations_have_their_shape() {
        let recs = records(1);
        let options = ExportOptions { embed: Some((Encoding::Graph, MemoryMode::Standard)) };
        let rows = probe_rows(&recs[0], options).unwrap();
        for row in rows {
            let shape = row.shape.unwrap();
            assert_eq!(shape.iter().product::<usize>(), row.features.unwrap().len());
        }
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let recs = records(1);
        let err = export_probing_dataset(&recs, Path::new("/nonexistent/dir/x.jsonl"), ExportOptions::default());
        assert!(matches!(err, Err(Error::Io(_))));
    }
}
