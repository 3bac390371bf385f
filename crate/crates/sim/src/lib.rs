//! Multi-node simulation of the baking protocol: slot draws, fork choice by
//! score, network latency, offline bakers and double bakers.
//!
//! Everything runs on one thread from a seeded RNG, so a config always
//! produces the same event log.

pub mod config;
pub mod engine;

use thiserror::Error;
use tzdesk_core::crypto::Hash;
use tzdesk_core::rights::{draw, Snapshot};
use tzdesk_core::{BlockHash, ProtocolError};
use tzdesk_michelson::Address;

pub use config::{ConfigError, DoubleBake, Latency, Offline, Partition, SimConfig};
pub use engine::{run_simulation, ChainBlock, LogEvent, LogLine, Outcome, Slashing, Summary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("no candidate heads")]
    EmptySet,
}

/// Baker of `(level, priority)` under a roll snapshot.
pub fn baking_slot(seed: &Hash, level: u64, priority: u16, snap: &Snapshot) -> Result<Address, ProtocolError> {
    draw(snap, seed, level, b"baking", priority)
}

/// The `n` endorsement slot owners of `level`; one delegate may hold several.
pub fn endorsement_slots(seed: &Hash, level: u64, snap: &Snapshot, n: u16) -> Result<Vec<Address>, ProtocolError> {
    (0..n).map(|s| draw(snap, seed, level, b"endorsement", s)).collect()
}

/// Highest score wins; equal scores go to the smaller block hash.
pub fn fork_choice(candidates: &[(BlockHash, u64)]) -> Result<BlockHash, SimError> {
    candidates
        .iter()
        .min_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)))
        .map(|c| c.0)
        .ok_or(SimError::EmptySet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tzdesk_core::crypto::hash;

    #[test]
    fn fork_choice_examples() {
        let (a, b) = (BlockHash(hash(b"a")), BlockHash(hash(b"b")));
        assert_eq!(fork_choice(&[]), Err(SimError::EmptySet));
        assert_eq!(fork_choice(&[(a, 3)]), Ok(a));
        assert_eq!(fork_choice(&[(a, 3), (b, 4)]), Ok(b));
        let small = if a < b { a } else { b };
        assert_eq!(fork_choice(&[(a, 4), (b, 4)]), Ok(small));
        assert_eq!(fork_choice(&[(b, 4), (a, 4)]), Ok(small));
    }

    #[test]
    fn single_delegate_holds_every_slot() {
        let d = Address::implicit([7; 20]);
        let snap = vec![(d, 5)];
        for level in 1..50 {
            assert_eq!(baking_slot(&hash(b"s"), level, (level % 4) as u16, &snap).unwrap(), d);
            assert!(endorsement_slots(&hash(b"s"), level, &snap, 32).unwrap().iter().all(|x| *x == d));
        }
        assert_eq!(baking_slot(&hash(b"s"), 1, 0, &vec![(d, 0)]), Err(ProtocolError::NoRolls));
    }
}
