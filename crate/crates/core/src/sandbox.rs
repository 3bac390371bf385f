//! An in-process chain whose delegates' keys are all known, baking on
//! demand. Used by tests, the client's sandbox transport and scenarios.

use std::collections::BTreeMap;

use tzdesk_michelson::Address;

use crate::block::{apply_block, bake, genesis, head_hash, head_level, sandbox_params, BlockResult, Genesis, GenesisParams};
use crate::constants::Constants;
use crate::context::Context;
use crate::crypto::SecretKey;
use crate::error::ProtocolError;
use crate::header::{Block, Endorsement};
use crate::operation::{Content, ManagerFields, Operation};
use crate::rights::{baking_rights, endorsement_slots};

pub struct Sandbox {
    pub genesis: Genesis,
    pub ctx: Context,
    pub keys: BTreeMap<Address, SecretKey>,
    pub blocks: Vec<Block>,
    /// Context after each block, index 0 being genesis.
    pub history: Vec<Context>,
}

impl Sandbox {
    pub fn new(constants: Constants) -> Sandbox {
        let keys = crate::block::bootstrap_keys(5);
        Sandbox::with_params(&sandbox_params(constants), keys).expect("sandbox genesis")
    }

    pub fn with_params(params: &GenesisParams, keys: Vec<SecretKey>) -> Result<Sandbox, ProtocolError> {
        let g = genesis(params)?;
        Ok(Sandbox {
            ctx: g.ctx.clone(),
            history: vec![g.ctx.clone()],
            genesis: g,
            keys: keys.into_iter().map(|k| (k.public_key().address(), k)).collect(),
            blocks: vec![],
        })
    }

    pub fn level(&self) -> u64 {
        head_level(&self.ctx)
    }

    /// Every endorsement slot of the head block held by a known key.
    pub fn endorse_head(&self) -> Vec<Endorsement> {
        let level = self.level();
        if level == 0 {
            return vec![];
        }
        let slots = endorsement_slots(&self.ctx, level).expect("rights for the head level");
        let head = head_hash(&self.ctx);
        slots
            .iter()
            .enumerate()
            .filter_map(|(slot, d)| self.keys.get(d).map(|sk| Endorsement::new(sk, level, slot as u16, head)))
            .collect()
    }

    /// Lowest priority for the next level held by a known key.
    pub fn next_baker(&self) -> (u16, SecretKey) {
        let rights = baking_rights(&self.ctx, self.level() + 1, 256).expect("rights for the next level");
        rights
            .iter()
            .enumerate()
            .find_map(|(p, d)| self.keys.get(d).map(|k| (p as u16, k.clone())))
            .expect("a known key holds a slot within 256 priorities")
    }

    /// Forges the next block with every known endorsement and the candidate
    /// operations that apply, without applying it.
    pub fn forge_next(&self, ops: &[Operation]) -> Block {
        let (priority, sk) = self.next_baker();
        bake(&self.ctx, &sk, priority, self.endorse_head(), ops)
    }

    pub fn apply(&mut self, block: Block) -> Result<BlockResult, ProtocolError> {
        let r = apply_block(&self.ctx, &block)?;
        self.ctx = r.ctx.clone();
        self.history.push(r.ctx.clone());
        self.blocks.push(block);
        Ok(r)
    }

    pub fn bake(&mut self, ops: &[Operation]) -> Result<BlockResult, ProtocolError> {
        let b = self.forge_next(ops);
        self.apply(b)
    }

    pub fn bake_empty(&mut self, n: u64) {
        for _ in 0..n {
            self.bake(&[]).expect("empty block applies");
        }
    }

    /// Manager fields for the next operation of `source`.
    pub fn manager(&self, source: &Address, fee: u64, gas_limit: u64, storage_limit: u64) -> ManagerFields {
        ManagerFields { source: *source, fee, counter: self.ctx.counter(source) + 1, gas_limit, storage_limit }
    }

    pub fn sign(&self, sk: &SecretKey, contents: Vec<Content>) -> Operation {
        Operation::sign(head_hash(&self.ctx), contents, sk)
    }

    pub fn add_key(&mut self, sk: SecretKey) -> Address {
        let a = sk.public_key().address();
        self.keys.insert(a, sk);
        a
    }
}
