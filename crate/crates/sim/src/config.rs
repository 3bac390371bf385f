use serde::{Deserialize, Serialize};
use thiserror::Error;
use tzdesk_core::{Constants, MUTEZ_PER_TEZ};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid simulation config: {0}")]
    Invalid(String),
    #[error("cannot parse simulation config: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub min_ms: u64,
    pub max_ms: u64,
}

/// Node `node` neither bakes nor endorses at levels `from_level..=to_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offline {
    pub node: usize,
    pub from_level: u64,
    pub to_level: u64,
}

/// Node `node` signs two blocks at its first slot of `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleBake {
    pub node: usize,
    pub level: u64,
}

/// Messages crossing the boundary of `group` sent during the window are
/// held until it closes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub group: Vec<usize>,
    pub from_ms: u64,
    pub to_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nodes: usize,
    /// Initial balance in tez of each node's delegate; equal shares when empty.
    #[serde(default)]
    pub stakes: Vec<u64>,
    #[serde(default = "zero_latency")]
    pub latency: Latency,
    #[serde(default)]
    pub offline: Vec<Offline>,
    #[serde(default)]
    pub byzantine: Vec<DoubleBake>,
    #[serde(default)]
    pub partitions: Vec<Partition>,
    pub levels: u64,
    pub seed: u64,
    /// Probability that a slot holder endorses a given level.
    #[serde(default = "one")]
    pub endorsement_rate: f64,
    #[serde(default = "Constants::desk")]
    pub constants: Constants,
}

fn zero_latency() -> Latency {
    Latency { min_ms: 0, max_ms: 0 }
}

fn one() -> f64 {
    1.0
}

impl SimConfig {
    pub fn new(nodes: usize, levels: u64, seed: u64) -> SimConfig {
        SimConfig {
            nodes,
            stakes: vec![],
            latency: zero_latency(),
            offline: vec![],
            byzantine: vec![],
            partitions: vec![],
            levels,
            seed,
            endorsement_rate: 1.0,
            constants: Constants::desk(),
        }
    }

    pub fn from_json(s: &str) -> Result<SimConfig, ConfigError> {
        let c: SimConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Stakes in mutez, one per node.
    pub fn stakes_mutez(&self) -> Vec<u64> {
        if self.stakes.is_empty() {
            vec![1_000_000 * MUTEZ_PER_TEZ; self.nodes]
        } else {
            self.stakes.iter().map(|t| t * MUTEZ_PER_TEZ).collect()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.nodes == 0 {
            return bad("at least one node is required".into());
        }
        if !self.stakes.is_empty() && self.stakes.len() != self.nodes {
            return bad(format!("{} stakes for {} nodes", self.stakes.len(), self.nodes));
        }
        let rolls: u64 = self.stakes_mutez().iter().map(|s| s / self.constants.tokens_per_roll).sum();
        if rolls == 0 {
            return bad("no node holds a roll".into());
        }
        if self.latency.min_ms > self.latency.max_ms {
            return bad("latency min exceeds max".into());
        }
        if !(0.0..=1.0).contains(&self.endorsement_rate) {
            return bad("endorsement_rate must lie in [0, 1]".into());
        }
        let nodes = self.offline.iter().map(|o| o.node).chain(self.byzantine.iter().map(|b| b.node));
        let nodes = nodes.chain(self.partitions.iter().flat_map(|p| p.group.iter().copied()));
        if let Some(n) = nodes.into_iter().find(|n| *n >= self.nodes) {
            return bad(format!("node {n} out of range"));
        }
        if self.byzantine.len() == self.nodes {
            return bad("at least one honest node is required".into());
        }
        if self.byzantine.iter().any(|b| b.level == 0) {
            return bad("genesis cannot be double baked".into());
        }
        Ok(())
    }

    pub fn is_byzantine(&self, node: usize) -> bool {
        self.byzantine.iter().any(|b| b.node == node)
    }

    pub fn is_offline(&self, node: usize, level: u64) -> bool {
        self.offline.iter().any(|o| o.node == node && (o.from_level..=o.to_level).contains(&level))
    }

    pub fn double_bakes_at(&self, node: usize, level: u64) -> bool {
        self.byzantine.iter().any(|b| b.node == node && b.level == level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults() {
        let c = SimConfig::from_json(r#"{"nodes": 3, "levels": 10, "seed": 1}"#).unwrap();
        assert_eq!(c, SimConfig::new(3, 10, 1));
        assert_eq!(c.stakes_mutez().len(), 3);
    }

    #[test]
    fn rejects_bad_configs() {
        for s in [
            r#"{"nodes": 0, "levels": 10, "seed": 1}"#,
            r#"{"nodes": 2, "stakes": [1], "levels": 10, "seed": 1}"#,
            r#"{"nodes": 2, "stakes": [1, 1], "levels": 10, "seed": 1}"#,
            r#"{"nodes": 2, "levels": 10, "seed": 1, "byzantine": [{"node": 2, "level": 3}]}"#,
            r#"{"nodes": 1, "levels": 10, "seed": 1, "byzantine": [{"node": 0, "level": 3}]}"#,
            r#"{"nodes": 2, "levels": 10, "seed": 1, "latency": {"min_ms": 5, "max_ms": 1}}"#,
            r#"{"nodes": 2, "levels": 10, "seed": 1, "endorsement_rate": 1.5}"#,
        ] {
            assert!(SimConfig::from_json(s).is_err(), "{s}");
        }
    }
}
