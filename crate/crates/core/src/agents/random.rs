//! Uniform choice over the legal actions.

use rand::Rng as _;

use super::{legal, Decision, Policy, PolicyOutput};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomAgent;

impl Policy for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&mut self, decision: &Decision<'_>, rng: &mut Rng) -> Result<PolicyOutput> {
        let legal = legal(decision.mask);
        if legal.is_empty() {
            return Err(Error::Contract("empty legality mask"));
        }
        let p = 1.0 / legal.len() as f64;
        let mut probabilities = vec![0.0; decision.mask.len()];
        for &i in &legal {
            probabilities[i] = p;
        }
        let action = legal[rng.random_range(0..legal.len())];
        Ok(PolicyOutput { action, probabilities: Some(probabilities) })
    }
}
