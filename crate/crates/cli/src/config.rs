//! Optional TOML configuration file.
//!
//! Top-level keys apply to every command; a table per command presets its
//! flags. Flags given on the command line win over the file.
//!
//! ```toml
//! server = "http://127.0.0.1:8080"
//! seed = 7
//! variant = "3x3"
//! players = 2
//!
//! [eval]
//! seat0 = "greedy"
//! seat1 = "random"
//! games = 1000
//! op = "c+r"
//!
//! [bench]
//! envs = [512, 1024, 2048]
//! steps = 1000
//!
//! [serve]
//! listen = "0.0.0.0:8080"
//! seat1 = "greedy"
//! ```

use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub server: Option<String>,
    pub seed: Option<u64>,
    pub variant: Option<String>,
    pub players: Option<usize>,
    #[serde(default)]
    pub bench: BenchFile,
    #[serde(default)]
    pub eval: EvalFile,
    #[serde(default)]
    pub crossplay: CrossPlayFile,
    #[serde(default)]
    pub diagnose: DiagnoseFile,
    #[serde(default)]
    pub export: ExportFile,
    #[serde(default)]
    pub serve: ServeFile,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFile {
    pub envs: Option<Vec<usize>>,
    pub steps: Option<usize>,
    pub observations: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub seat0: Option<String>,
    pub seat1: Option<String>,
    pub seat2: Option<String>,
    pub seat3: Option<String>,
    pub games: Option<usize>,
    pub op: Option<String>,
    pub memory: Option<String>,
    pub records: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossPlayFile {
    pub pool: Option<Vec<String>>,
    pub games: Option<usize>,
    pub op: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseFile {
    pub policy: Option<String>,
    pub fixtures: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportFile {
    pub games: Option<usize>,
    pub out: Option<String>,
    pub seat0: Option<String>,
    pub seat1: Option<String>,
    pub embed: Option<String>,
    pub memory: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeFile {
    pub listen: Option<String>,
    pub seat0: Option<String>,
    pub seat1: Option<String>,
    pub journal_dir: Option<String>,
    pub allow_external: Option<bool>,
}

pub fn load(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}
