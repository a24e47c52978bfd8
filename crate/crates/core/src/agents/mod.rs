//! Seat policies: scripted baselines and the external-policy bridge.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{ActionLayout, ActionMask};
use crate::error::{Error, Result};
use crate::observation::{Encoding, MemoryMode, Observation, SeatView};
use crate::rng::Rng;

pub mod external;
pub mod greedy;
pub mod knowledge;
pub mod oracle;
pub mod random;

pub use external::{ExternalPolicy, Transport};
pub use greedy::GreedyAgent;
pub use knowledge::Knowledge;
pub use oracle::MemoryOracle;
pub use random::RandomAgent;

/// Everything a policy receives for one decision. The view is always in
/// the policy's own frame.
pub struct Decision<'a> {
    pub view: &'a SeatView,
    pub mask: &'a ActionMask,
    pub layout: &'a ActionLayout,
    pub observation: Option<&'a Observation>,
    pub episode: u64,
    pub step: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    pub action: usize,
    /// Distribution over the whole layout, zero on illegal entries.
    pub probabilities: Option<Vec<f64>>,
}

impl PolicyOutput {
    pub fn deterministic(action: usize, count: usize) -> Self {
        let mut p = vec![0.0; count];
        p[action] = 1.0;
        Self { action, probabilities: Some(p) }
    }
}

pub trait Policy: Send {
    fn name(&self) -> String;

    /// Memory mode the policy's view must be built with.
    fn memory_mode(&self) -> MemoryMode {
        MemoryMode::Standard
    }

    /// Tensor encoding the policy wants alongside the view, if any.
    fn encoding(&self) -> Option<Encoding> {
        None
    }

    fn reset(&mut self, _episode: u64) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, decision: &Decision<'_>, rng: &mut Rng) -> Result<PolicyOutput>;
}

/// Parsed form of a policy name as used on the command line and over HTTP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PolicySpec {
    Random,
    Greedy,
    Oracle,
    /// Child process speaking the wire protocol on its standard streams.
    Command(String),
    /// TCP endpoint speaking the wire protocol.
    Tcp(String),
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "greedy" => Ok(Self::Greedy),
            "oracle" | "memory-oracle" => Ok(Self::Oracle),
            other => {
                if let Some(cmd) = other.strip_prefix("external:cmd:") {
                    Ok(Self::Command(cmd.to_string()))
                } else if let Some(addr) = other.strip_prefix("external:tcp:") {
                    Ok(Self::Tcp(addr.to_string()))
                } else {
                    Err(Error::Config(format!(
                        "unknown policy {other:?} (random, greedy, oracle, external:cmd:<command>, external:tcp:<addr>)"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random => f.write_str("random"),
            Self::Greedy => f.write_str("greedy"),
            Self::Oracle => f.write_str("oracle"),
            Self::Command(c) => write!(f, "external:cmd:{c}"),
            Self::Tcp(a) => write!(f, "external:tcp:{a}"),
        }
    }
}

impl From<PolicySpec> for String {
    fn from(spec: PolicySpec) -> String {
        spec.to_string()
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl PolicySpec {
    /// Instantiate the policy for one seat.
    pub fn build(&self, seat: usize, setup: &external::Handshake) -> Result<Box<dyn Policy>> {
        Ok(match self {
            Self::Random => Box::new(RandomAgent),
            Self::Greedy => Box::new(GreedyAgent),
            Self::Oracle => Box::new(MemoryOracle::default()),
            Self::Command(cmd) => Box::new(ExternalPolicy::connect(
                Transport::Command(cmd.clone()),
                &external::Handshake { seat, ..setup.clone() },
            )?),
            Self::Tcp(addr) => Box::new(ExternalPolicy::connect(
                Transport::Tcp(addr.clone()),
                &external::Handshake { seat, ..setup.clone() },
            )?),
        })
    }
}

/// Every legal entry of `mask`, ascending.
pub(crate) fn legal(mask: &ActionMask) -> Vec<usize> {
    mask.iter_set().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_names_round_trip() {
        for s in ["random", "greedy", "oracle", "external:cmd:python3 policy.py", "external:tcp:127.0.0.1:9000"] {
            let spec: PolicySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("smart".parse::<PolicySpec>().is_err());
    }
}
