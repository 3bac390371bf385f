//! The discrete-event loop. Events are ordered by (time in ms, event id).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tzdesk_core::apply::Status;
use tzdesk_core::block::{bake, slot_timestamp, BootstrapAccount, SANDBOX_GENESIS_TIME};
use tzdesk_core::rights::{endorsement_rights, first_priority};
use tzdesk_core::{apply_block, genesis, score, Block, BlockHash, BlockHeader, Content, Context, Endorsement, GenesisParams, Operation, SecretKey};
use tzdesk_michelson::Address;

use crate::config::{ConfigError, SimConfig};
use crate::fork_choice;

/// Priorities searched when a node looks for its own slot.
pub const MAX_PRIORITY: u16 = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Bake { node: usize, level: u64, priority: u16, hash: String, endorsements: usize, operations: usize, double: bool },
    Endorse { node: usize, level: u64, block: String, slots: usize },
    Head { node: usize, level: u64, hash: String, score: u64 },
    Invalid { node: usize, hash: String, error: String },
    Accuse { node: usize, offender: String, level: u64 },
    Disagree { heads: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLine {
    pub t: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slashing {
    pub offender: String,
    pub level: u64,
    pub included_at: u64,
    pub burned: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub heads: Vec<String>,
    pub head_levels: Vec<u64>,
    pub converged: bool,
    /// Highest level at which every honest node's chain holds the same block.
    pub common_level: u64,
    /// Levels at which more than one block was baked.
    pub forks_observed: u64,
    pub blocks_baked: u64,
    pub invalid_blocks: u64,
    pub accusations_crafted: u64,
    pub slashings: Vec<Slashing>,
    pub conservation_checks: u64,
    pub conservation_violations: Vec<String>,
    /// Mid-slot samples at which honest nodes had different heads.
    pub disagreement_samples: u64,
}

/// A block of a node's final chain with the context it produced.
#[derive(Debug, Clone)]
pub struct ChainBlock {
    pub block: Arc<Block>,
    pub ctx: Context,
    pub slashings: Vec<Slashing>,
}

#[derive(Debug)]
pub struct Outcome {
    pub log: Vec<LogLine>,
    pub summary: Summary,
    pub genesis: Context,
    /// Final chain of every node, genesis excluded.
    pub chains: Vec<Vec<ChainBlock>>,
}

impl Outcome {
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for l in &self.log {
            out.push_str(&serde_json::to_string(l).expect("log lines serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone)]
enum Msg {
    Block(Arc<Block>),
    Endorsement(Endorsement),
}

enum Event {
    Bake { node: usize, parent: BlockHash, level: u64, priority: u16 },
    Deliver { node: usize, msg: Msg },
    Sample,
}

struct Entry {
    block: Option<Arc<Block>>,
    ctx: Context,
    level: u64,
    score: u64,
    slashings: Vec<Slashing>,
}

struct Node {
    sk: SecretKey,
    addr: Address,
    honest: bool,
    known: BTreeMap<BlockHash, Entry>,
    head: BlockHash,
    orphans: BTreeMap<BlockHash, Vec<Arc<Block>>>,
    endorsements: BTreeMap<BlockHash, BTreeMap<u16, Endorsement>>,
    mempool: Vec<Operation>,
    seen: BTreeMap<(u64, Address), BlockHeader>,
    accused: BTreeSet<(u64, Address)>,
    baked: BTreeSet<u64>,
    endorsed: BTreeSet<u64>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    genesis_time: i64,
    delays: Vec<Vec<u64>>,
    queue: BTreeMap<(u64, u64), Event>,
    next_id: u64,
    nodes: Vec<Node>,
    log: Vec<LogLine>,
    produced: BTreeMap<u64, BTreeSet<BlockHash>>,
    invalid: u64,
    accusations: u64,
    checks: u64,
    violations: Vec<String>,
    disagreements: u64,
}

pub fn node_key(i: usize) -> SecretKey {
    SecretKey::from_label(&format!("sim-node-{i}"))
}

pub fn run_simulation(cfg: &SimConfig) -> Result<Outcome, ConfigError> {
    cfg.validate()?;
    let keys: Vec<SecretKey> = (0..cfg.nodes).map(node_key).collect();
    let params = GenesisParams {
        constants: cfg.constants.clone(),
        accounts: keys
            .iter()
            .zip(cfg.stakes_mutez())
            .map(|(k, balance)| BootstrapAccount { public_key: k.public_key(), balance, delegate: true })
            .collect(),
        timestamp: SANDBOX_GENESIS_TIME,
        chain_name: format!("sim-{}", cfg.seed),
    };
    let g = genesis(&params).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let delays = (0..cfg.nodes)
        .map(|i| {
            (0..cfg.nodes)
                .map(|j| if i == j { 0 } else { rng.gen_range(cfg.latency.min_ms..=cfg.latency.max_ms) })
                .collect()
        })
        .collect();
    let nodes = keys
        .into_iter()
        .enumerate()
        .map(|(i, sk)| {
            let mut known = BTreeMap::new();
            known.insert(g.hash, Entry { block: None, ctx: g.ctx.clone(), level: 0, score: 0, slashings: vec![] });
            Node {
                addr: sk.public_key().address(),
                sk,
                honest: !cfg.is_byzantine(i),
                known,
                head: g.hash,
                orphans: BTreeMap::new(),
                endorsements: BTreeMap::new(),
                mempool: vec![],
                seen: BTreeMap::new(),
                accused: BTreeSet::new(),
                baked: BTreeSet::new(),
                endorsed: BTreeSet::new(),
            }
        })
        .collect();
    let mut sim = Sim {
        cfg,
        rng,
        genesis_time: g.timestamp,
        delays,
        queue: BTreeMap::new(),
        next_id: 0,
        nodes,
        log: vec![],
        produced: BTreeMap::new(),
        invalid: 0,
        accusations: 0,
        checks: 0,
        violations: vec![],
        disagreements: 0,
    };
    let tbb = cfg.constants.time_between_blocks as u64 * 1000;
    for level in 1..=cfg.levels {
        sim.push(level * tbb + tbb / 2, Event::Sample);
    }
    for n in 0..cfg.nodes {
        sim.on_new_head(n, 0);
    }
    while let Some(((t, _), ev)) = sim.queue.pop_first() {
        match ev {
            Event::Bake { node, parent, level, priority } => sim.bake(node, t, parent, level, priority),
            Event::Deliver { node, msg: Msg::Block(b) } => sim.receive_block(node, t, b),
            Event::Deliver { node, msg: Msg::Endorsement(e) } => {
                sim.nodes[node].endorsements.entry(e.block).or_default().entry(e.slot).or_insert(e);
            }
            Event::Sample => sim.sample(t),
        }
    }
    Ok(sim.finish(g.ctx))
}

impl Sim<'_> {
    fn push(&mut self, t: u64, ev: Event) {
        self.queue.insert((t, self.next_id), ev);
        self.next_id += 1;
    }

    fn log(&mut self, t: u64, event: LogEvent) {
        self.log.push(LogLine { t, event });
    }

    fn time_of(&self, timestamp: i64) -> u64 {
        (timestamp - self.genesis_time).max(0) as u64 * 1000
    }

    fn arrival(&self, from: usize, to: usize, t: u64) -> u64 {
        let mut at = t + self.delays[from][to];
        for p in &self.cfg.partitions {
            let crosses = p.group.contains(&from) != p.group.contains(&to);
            if crosses && (p.from_ms..p.to_ms).contains(&t) {
                at = at.max(p.to_ms + self.delays[from][to]);
            }
        }
        at
    }

    fn broadcast(&mut self, from: usize, t: u64, msg: Msg) {
        for to in 0..self.nodes.len() {
            let at = self.arrival(from, to, t);
            self.push(at, Event::Deliver { node: to, msg: msg.clone() });
        }
    }

    fn on_new_head(&mut self, n: usize, t: u64) {
        let node = &self.nodes[n];
        let head = node.head;
        let entry = &node.known[&head];
        let (level, ctx) = (entry.level, entry.ctx.clone());
        if level >= 1 && !self.cfg.is_offline(n, level) && !node.endorsed.contains(&level) {
            let mine = endorsement_rights(&ctx, level).ok().and_then(|r| r.get(&node.addr).cloned()).unwrap_or_default();
            if !mine.is_empty() {
                self.nodes[n].endorsed.insert(level);
                if self.cfg.endorsement_rate >= 1.0 || self.rng.gen_bool(self.cfg.endorsement_rate) {
                    for &slot in &mine {
                        let e = Endorsement::new(&self.nodes[n].sk, level, slot, head);
                        self.broadcast(n, t, Msg::Endorsement(e));
                    }
                    self.log(t, LogEvent::Endorse { node: n, level, block: head.to_string(), slots: mine.len() });
                }
            }
        }
        let next = level + 1;
        let node = &self.nodes[n];
        if next <= self.cfg.levels && !self.cfg.is_offline(n, next) && !node.baked.contains(&next) {
            if let Ok(Some(priority)) = first_priority(&ctx, next, &node.addr, MAX_PRIORITY) {
                let at = self.time_of(slot_timestamp(&ctx, priority)).max(t);
                self.push(at, Event::Bake { node: n, parent: head, level: next, priority });
            }
        }
    }

    fn bake(&mut self, n: usize, t: u64, parent: BlockHash, level: u64, priority: u16) {
        let double = self.cfg.double_bakes_at(n, level);
        let node = &self.nodes[n];
        if node.baked.contains(&level) || (!double && node.head != parent) {
            return;
        }
        let ctx = &node.known[&parent].ctx;
        let endorsements: Vec<Endorsement> =
            node.endorsements.get(&parent).map(|m| m.values().cloned().collect()).unwrap_or_default();
        let block = bake(ctx, &node.sk, priority, endorsements, &node.mempool);
        let mut blocks = vec![block];
        if double {
            let a = &blocks[0];
            let twin = Block::forge(&node.sk, level, parent, a.header.timestamp + 1, priority, vec![], a.operations.clone());
            blocks.push(twin);
        }
        self.nodes[n].baked.insert(level);
        for b in blocks {
            let hash = b.hash();
            self.produced.entry(level).or_default().insert(hash);
            let event = LogEvent::Bake {
                node: n,
                level,
                priority,
                hash: hash.to_string(),
                endorsements: b.endorsements.len(),
                operations: b.operations.len(),
                double,
            };
            self.log(t, event);
            self.broadcast(n, t, Msg::Block(Arc::new(b)));
        }
    }

    fn receive_block(&mut self, n: usize, t: u64, block: Arc<Block>) {
        let mut work = vec![block];
        while let Some(b) = work.pop() {
            let hash = b.hash();
            let node = &mut self.nodes[n];
            if node.known.contains_key(&hash) {
                continue;
            }
            let Some(parent) = node.known.get(&b.header.predecessor) else {
                node.orphans.entry(b.header.predecessor).or_default().push(b);
                continue;
            };
            let r = match apply_block(&parent.ctx, &b) {
                Ok(r) => r,
                Err(e) => {
                    self.invalid += 1;
                    self.log(t, LogEvent::Invalid { node: n, hash: hash.to_string(), error: e.to_string() });
                    continue;
                }
            };
            self.checks += 1;
            if let Err(e) = r.ctx.check_conservation() {
                self.violations.push(format!("node {n} block {hash}: {e}"));
            }
            let slashings = slashings_of(&b, &r.receipts);
            let entry = Entry { level: b.header.level, score: score(&r.ctx), ctx: r.ctx, block: Some(b.clone()), slashings };
            let new_score = entry.score;
            node.known.insert(hash, entry);
            if let Some(children) = node.orphans.remove(&hash) {
                work.extend(children);
            }
            if node.honest {
                self.watch_for_double_bake(n, t, &b.header);
            }
            let node = &mut self.nodes[n];
            let current = (node.head, node.known[&node.head].score);
            if fork_choice(&[current, (hash, new_score)]).expect("two candidates") != node.head {
                node.head = hash;
                let level = b.header.level;
                self.log(t, LogEvent::Head { node: n, level, hash: hash.to_string(), score: new_score });
                self.on_new_head(n, t);
            }
        }
    }

    fn watch_for_double_bake(&mut self, n: usize, t: u64, h: &BlockHeader) {
        let node = &mut self.nodes[n];
        let key = (h.level, h.baker);
        match node.seen.get(&key) {
            None => {
                node.seen.insert(key, h.clone());
            }
            Some(first) if first.hash() != h.hash() && node.accused.insert(key) => {
                let evidence = Content::double_baking(first.clone(), h.clone());
                node.mempool.push(Operation::unsigned(node.head, vec![evidence]));
                self.accusations += 1;
                self.log(t, LogEvent::Accuse { node: n, offender: h.baker.to_string(), level: h.level });
            }
            Some(_) => {}
        }
    }

    fn sample(&mut self, t: u64) {
        let heads: BTreeSet<BlockHash> = self.nodes.iter().filter(|n| n.honest).map(|n| n.head).collect();
        if heads.len() > 1 {
            self.disagreements += 1;
            self.log(t, LogEvent::Disagree { heads: heads.iter().map(|h| h.to_string()).collect() });
        }
    }

    fn chain(&self, n: usize) -> Vec<ChainBlock> {
        let node = &self.nodes[n];
        let mut out = Vec::new();
        let mut at = node.head;
        while let Some(Entry { block: Some(b), ctx, slashings, .. }) = node.known.get(&at) {
            out.push(ChainBlock { block: b.clone(), ctx: ctx.clone(), slashings: slashings.clone() });
            at = b.header.predecessor;
        }
        out.reverse();
        out
    }

    fn finish(self, genesis: Context) -> Outcome {
        let chains: Vec<Vec<ChainBlock>> = (0..self.nodes.len()).map(|n| self.chain(n)).collect();
        let honest: Vec<usize> = (0..self.nodes.len()).filter(|n| self.nodes[*n].honest).collect();
        let shortest = honest.iter().map(|n| chains[*n].len()).min().unwrap_or(0);
        let common_level = (0..shortest)
            .take_while(|i| honest.iter().all(|n| chains[*n][*i].block.hash() == chains[honest[0]][*i].block.hash()))
            .count() as u64;
        let heads: Vec<String> = self.nodes.iter().map(|n| n.head.to_string()).collect();
        let converged = honest.iter().all(|n| self.nodes[*n].head == self.nodes[honest[0]].head);
        let slashings = chains[honest[0]].iter().flat_map(|c| c.slashings.clone()).collect();
        let summary = Summary {
            head_levels: self.nodes.iter().map(|n| n.known[&n.head].level).collect(),
            heads,
            converged,
            common_level,
            forks_observed: self.produced.values().filter(|s| s.len() > 1).count() as u64,
            blocks_baked: self.produced.values().map(|s| s.len() as u64).sum(),
            invalid_blocks: self.invalid,
            accusations_crafted: self.accusations,
            slashings,
            conservation_checks: self.checks,
            conservation_violations: self.violations,
            disagreement_samples: self.disagreements,
        };
        Outcome { log: self.log, summary, genesis, chains }
    }
}

fn slashings_of(b: &Block, receipts: &[tzdesk_core::Receipt]) -> Vec<Slashing> {
    let mut out = Vec::new();
    for (op, r) in b.operations.iter().zip(receipts) {
        for (c, res) in op.contents.iter().zip(&r.results) {
            if let (Content::DoubleBaking { bh1, .. }, Status::Applied) = (c, res.status) {
                out.push(Slashing {
                    offender: bh1.baker.to_string(),
                    level: bh1.level,
                    included_at: b.header.level,
                    burned: res.burned,
                });
            }
        }
    }
    out
}
