//! Block application, scoring and genesis.

use serde::Serialize;
use tzdesk_michelson::Address;

use crate::apply::{apply_operation, BlockEnv, Frame, Mode, Receipt};
use crate::constants::Constants;
use crate::context::Context;
use crate::crypto::{hash_parts, BlockHash, ChainId, PublicKey, SecretKey};
use crate::error::ProtocolError;
use crate::header::{Block, Endorsement};
use crate::operation::Operation;
use crate::rights::{baker_at, endorsement_slots, next_seed, seed, take_snapshot};
use crate::voting::{activate_pending, genesis_protocol, voting_step, PeriodKind, VotingState};

pub fn head_level(ctx: &Context) -> u64 {
    ctx.get_u64(&["head", "level"])
}

pub fn head_hash(ctx: &Context) -> BlockHash {
    BlockHash(ctx.get(&["head", "hash"]).expect("head hash is set at genesis").try_into().expect("32 bytes"))
}

pub fn head_timestamp(ctx: &Context) -> i64 {
    ctx.get_u64(&["head", "timestamp"]) as i64
}

/// Chain weight used by fork choice: each block adds one plus the number
/// of endorsements it carries.
pub fn score(ctx: &Context) -> u64 {
    ctx.get_u64(&["head", "score"])
}

pub fn chain_id(ctx: &Context) -> ChainId {
    ChainId(ctx.get(&["chain_id"]).expect("chain id is set at genesis").try_into().expect("4 bytes"))
}

#[derive(Debug)]
pub struct BlockResult {
    pub ctx: Context,
    pub receipts: Vec<Receipt>,
    pub trace: Vec<Frame>,
    /// Funds unfrozen at a cycle end, per delegate.
    pub unfrozen: Vec<(Address, u64)>,
}

/// Checks a block against its parent context and computes the new context.
/// Pure: the result depends only on the two arguments.
pub fn apply_block(parent: &Context, block: &Block) -> Result<BlockResult, ProtocolError> {
    let k = parent.constants();
    let h = &block.header;
    let expected = head_level(parent) + 1;
    if h.level != expected {
        return Err(ProtocolError::WrongLevel { expected, found: h.level });
    }
    let pred = head_hash(parent);
    if h.predecessor != pred {
        return Err(ProtocolError::WrongPredecessor { expected: pred, found: h.predecessor });
    }
    let minimal = head_timestamp(parent) + k.time_between_blocks;
    if h.timestamp < minimal {
        return Err(ProtocolError::TimestampTooEarly { minimal, found: h.timestamp });
    }
    if baker_at(parent, h.level, h.priority)? != h.baker {
        return Err(ProtocolError::WrongBaker { baker: h.baker, priority: h.priority });
    }
    let pk = parent.manager_key(&h.baker).ok_or(ProtocolError::InvalidBlockSignature)?;
    if !h.check_signature(&pk) {
        return Err(ProtocolError::InvalidBlockSignature);
    }
    if Block::compute_operations_hash(&block.endorsements, &block.operations) != h.operations_hash {
        return Err(ProtocolError::BadOperationsHash);
    }
    check_endorsements(parent, block, &k)?;

    let mut c = parent.clone();
    let cycle = k.cycle_of(h.level);
    c.freeze_deposit(&h.baker, cycle, k.block_security_deposit)?;
    c.reward(&h.baker, cycle, k.block_reward);
    for e in &block.endorsements {
        c.freeze_deposit(&e.delegate, cycle, k.endorsement_security_deposit)?;
        c.reward(&e.delegate, cycle, k.endorsement_reward);
    }

    let env = BlockEnv { level: h.level, timestamp: h.timestamp };
    let mut receipts = Vec::new();
    let mut trace = Vec::new();
    for op in &block.operations {
        let applied = apply_operation(&c, op, &env, Mode::Real)
            .map_err(|e| ProtocolError::InvalidOperation { hash: op.hash(), error: Box::new(e) })?;
        c = applied.ctx;
        receipts.push(applied.receipt);
        trace.extend(applied.trace);
    }
    let fees = c.take_pending_fees();
    c.freeze_fees(&h.baker, cycle, fees);

    c.set_u64(&["head", "level"], h.level);
    c.set(&["head", "hash"], block.hash().0.to_vec());
    c.set_u64(&["head", "timestamp"], h.timestamp as u64);
    c.set_u64(&["head", "score"], score(parent) + 1 + block.endorsements.len() as u64);

    if k.is_voting_period_end(h.level) {
        voting_step(&mut c, h.level);
    }
    let mut unfrozen = Vec::new();
    if k.is_cycle_end(h.level) {
        unfrozen = end_cycle(&mut c, cycle)?;
    }
    Ok(BlockResult { ctx: c, receipts, trace, unfrozen })
}

fn check_endorsements(parent: &Context, block: &Block, k: &Constants) -> Result<(), ProtocolError> {
    if block.endorsements.is_empty() {
        return Ok(());
    }
    let bad = |m: String| ProtocolError::InvalidEndorsement(m);
    if block.endorsements.len() > k.endorsers_per_block as usize {
        return Err(bad("too many endorsements".into()));
    }
    let target = block.header.level - 1;
    if target == 0 {
        return Err(bad("genesis cannot be endorsed".into()));
    }
    let slots = endorsement_slots(parent, target)?;
    let mut seen = vec![false; slots.len()];
    for e in &block.endorsements {
        if e.level != target || e.block != block.header.predecessor {
            return Err(bad(format!("slot {} does not endorse the predecessor", e.slot)));
        }
        let owner = slots.get(e.slot as usize).ok_or_else(|| bad(format!("no slot {}", e.slot)))?;
        if *owner != e.delegate {
            return Err(bad(format!("slot {} does not belong to {}", e.slot, e.delegate)));
        }
        if std::mem::replace(&mut seen[e.slot as usize], true) {
            return Err(bad(format!("slot {} endorsed twice", e.slot)));
        }
        let pk = parent.manager_key(&e.delegate).ok_or_else(|| bad("unrevealed endorser".into()))?;
        if !e.check_signature(&pk) {
            return Err(bad(format!("bad signature on slot {}", e.slot)));
        }
    }
    Ok(())
}

fn end_cycle(c: &mut Context, cycle: u64) -> Result<Vec<(Address, u64)>, ProtocolError> {
    activate_pending(c);
    let k = c.constants();
    let mut unfrozen = Vec::new();
    if cycle >= k.preserved_cycles {
        let old = cycle - k.preserved_cycles;
        for d in c.delegates() {
            if c.frozen(&d, old).total() > 0 {
                unfrozen.push((d, c.unfreeze(&d, old)?));
            }
        }
    }
    let s = next_seed(&seed(c, cycle).expect("current cycle has a seed"), cycle + 1);
    take_snapshot(c, cycle + 1, s);
    if cycle > 0 {
        c.del_prefix(&["cycle", &(cycle - 1).to_string()]);
    }
    Ok(unfrozen)
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapAccount {
    pub public_key: PublicKey,
    pub balance: u64,
    pub delegate: bool,
}

#[derive(Debug, Clone)]
pub struct GenesisParams {
    pub constants: Constants,
    pub accounts: Vec<BootstrapAccount>,
    pub timestamp: i64,
    pub chain_name: String,
}

#[derive(Debug, Clone)]
pub struct Genesis {
    pub ctx: Context,
    pub hash: BlockHash,
    pub chain_id: ChainId,
    pub timestamp: i64,
}

/// 2019-05-07T00:00:00Z.
pub const SANDBOX_GENESIS_TIME: i64 = 1_557_187_200;

pub const BOOTSTRAP_BALANCE: u64 = 4_000_000 * crate::constants::MUTEZ_PER_TEZ;

/// Keys of the sandbox bootstrap delegates `bootstrap1..=n`.
pub fn bootstrap_keys(n: usize) -> Vec<SecretKey> {
    (1..=n).map(|i| SecretKey::from_label(&format!("bootstrap{i}"))).collect()
}

/// Five revealed delegates holding 4,000,000 tez each.
pub fn sandbox_params(constants: Constants) -> GenesisParams {
    GenesisParams {
        constants,
        accounts: bootstrap_keys(5)
            .iter()
            .map(|k| BootstrapAccount { public_key: k.public_key(), balance: BOOTSTRAP_BALANCE, delegate: true })
            .collect(),
        timestamp: SANDBOX_GENESIS_TIME,
        chain_name: "sandbox".into(),
    }
}

pub fn genesis(p: &GenesisParams) -> Result<Genesis, ProtocolError> {
    let mut c = Context::default();
    c.set_constants(&p.constants);
    for a in &p.accounts {
        let addr = a.public_key.address();
        c.credit(&addr, a.balance)?;
        c.set_manager_key(&addr, &a.public_key);
        if a.delegate {
            c.set_delegate(&addr, Some(addr))?;
        }
    }
    let initial = c.total_balances() as u64;
    c.set_u64(&["supply", "initial"], initial);
    let hash = BlockHash(hash_parts(&[b"genesis", p.chain_name.as_bytes(), &p.timestamp.to_be_bytes()]));
    let chain_id = ChainId(hash_parts(&[&hash.0])[..4].try_into().expect("4 bytes"));
    c.set(&["chain_id"], chain_id.0.to_vec());
    c.set_u64(&["head", "level"], 0);
    c.set(&["head", "hash"], hash.0.to_vec());
    c.set_u64(&["head", "timestamp"], p.timestamp as u64);
    c.set_u64(&["head", "score"], 0);
    c.set(&["protocol", "hash"], genesis_protocol().0.to_vec());
    take_snapshot(&mut c, 0, hash_parts(&[b"seed", &hash.0]));
    VotingState::fresh(&c, 0, PeriodKind::Proposal, 1, None).store(&mut c);
    Ok(Genesis { ctx: c, hash, chain_id, timestamp: p.timestamp })
}

/// Timestamp a block at `priority` is expected to carry on top of `parent`.
pub fn slot_timestamp(parent: &Context, priority: u16) -> i64 {
    head_timestamp(parent) + parent.constants().time_between_blocks * (1 + priority as i64)
}

/// Keeps the candidates that apply cleanly in sequence on `parent`, as a
/// baker does with its mempool.
pub fn select_operations(parent: &Context, level: u64, timestamp: i64, candidates: &[Operation]) -> Vec<Operation> {
    let env = BlockEnv { level, timestamp };
    let mut c = parent.clone();
    let mut out = Vec::new();
    for op in candidates {
        if let Ok(a) = apply_operation(&c, op, &env, Mode::Real) {
            c = a.ctx;
            out.push(op.clone());
        }
    }
    out
}

/// Bakes a signed block on `parent` at `priority`, keeping only the
/// candidate operations that apply.
pub fn bake(parent: &Context, sk: &SecretKey, priority: u16, endorsements: Vec<Endorsement>, candidates: &[Operation]) -> Block {
    let level = head_level(parent) + 1;
    let timestamp = slot_timestamp(parent, priority);
    let ops = select_operations(parent, level, timestamp, candidates);
    Block::forge(sk, level, head_hash(parent), timestamp, priority, endorsements, ops)
}
