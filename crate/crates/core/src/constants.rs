//! Protocol parameters. They live in the context so that an adopted
//! amendment can change them.

use serde::{Deserialize, Serialize};

pub const MUTEZ_PER_TEZ: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub blocks_per_cycle: u64,
    pub blocks_per_voting_period: u64,
    pub preserved_cycles: u64,
    pub time_between_blocks: i64,
    pub endorsers_per_block: u16,
    pub tokens_per_roll: u64,
    pub block_reward: u64,
    pub endorsement_reward: u64,
    pub block_security_deposit: u64,
    pub endorsement_security_deposit: u64,
    pub hard_gas_limit_per_operation: u64,
    pub hard_storage_limit_per_operation: u64,
    pub cost_per_byte: u64,
    pub supermajority_percent: u64,
    /// Blocks a client waits on top of an inclusion before trusting it.
    pub confirmation_depth: u64,
}

impl Constants {
    /// Mainnet-like values.
    pub fn mainnet() -> Constants {
        Constants {
            blocks_per_cycle: 4096,
            blocks_per_voting_period: 32768,
            preserved_cycles: 5,
            time_between_blocks: 60,
            endorsers_per_block: 32,
            tokens_per_roll: 10_000 * MUTEZ_PER_TEZ,
            block_reward: 16 * MUTEZ_PER_TEZ,
            endorsement_reward: 2 * MUTEZ_PER_TEZ,
            block_security_deposit: 256 * MUTEZ_PER_TEZ,
            endorsement_security_deposit: 64 * MUTEZ_PER_TEZ,
            hard_gas_limit_per_operation: 400_000,
            hard_storage_limit_per_operation: 60_000,
            cost_per_byte: 1_000,
            supermajority_percent: 80,
            confirmation_depth: 60,
        }
    }

    /// Short cycles and voting periods for sandboxes, simulations and tests.
    pub fn desk() -> Constants {
        Constants { blocks_per_cycle: 16, blocks_per_voting_period: 8, ..Constants::mainnet() }
    }

    /// Cycle containing `level`. Level 0 is genesis and belongs to cycle 0.
    pub fn cycle_of(&self, level: u64) -> u64 {
        level.saturating_sub(1) / self.blocks_per_cycle
    }

    pub fn is_cycle_end(&self, level: u64) -> bool {
        level > 0 && level % self.blocks_per_cycle == 0
    }

    pub fn is_voting_period_end(&self, level: u64) -> bool {
        level > 0 && level % self.blocks_per_voting_period == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles() {
        let c = Constants::desk();
        assert_eq!(c.cycle_of(0), 0);
        assert_eq!(c.cycle_of(1), 0);
        assert_eq!(c.cycle_of(16), 0);
        assert_eq!(c.cycle_of(17), 1);
        assert!(c.is_cycle_end(16) && !c.is_cycle_end(17) && !c.is_cycle_end(0));
    }
}
