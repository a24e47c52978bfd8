//! Memory oracle: observes a new card whenever it can and never forgets.

use super::greedy::greedy_act;
use super::knowledge::Knowledge;
use super::{legal, Decision, Policy, PolicyOutput};
use crate::action::Action;
use crate::error::Result;
use crate::game::Substep;
use crate::observation::MemoryMode;
use crate::rng::Rng;

#[derive(Debug, Clone, Default)]
pub struct MemoryOracle {
    knowledge: Vec<Option<u8>>,
}

impl MemoryOracle {
    /// Card colours known after the last decision.
    pub fn knowledge(&self) -> &[Option<u8>] {
        &self.knowledge
    }
}

impl Policy for MemoryOracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn memory_mode(&self) -> MemoryMode {
        MemoryMode::Perfect
    }

    fn reset(&mut self, _episode: u64) -> Result<()> {
        self.knowledge.clear();
        Ok(())
    }

    fn act(&mut self, decision: &Decision<'_>, _rng: &mut Rng) -> Result<PolicyOutput> {
        let view = decision.view;
        self.knowledge = Knowledge::from_view(view).known();
        if view.is_acting() && matches!(view.substep, Substep::Peek1 | Substep::Peek2) {
            let fresh = legal(decision.mask).into_iter().find(|&i| {
                matches!(decision.layout.decode(i), Ok(Action::ObserveCard { card }) if !view.cards[card].peeked_by_self)
            });
            if let Some(index) = fresh {
                return Ok(PolicyOutput::deterministic(index, decision.layout.count));
            }
        }
        greedy_act(decision)
    }
}
