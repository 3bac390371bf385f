//! The RPC surface as a plain request handler. The HTTP server and the
//! client's in-process transport both go through [`NodeService::handle`].
//!
//! Mutations (injection, baking) take the write lock; reads clone the
//! immutable head context and release the lock.

use std::collections::BTreeMap;
use std::sync::RwLock;

use serde_json::{json, Value as Json};
use tzdesk_core::apply::{contract_size, load_storage};
use tzdesk_core::block::{bake, select_operations, slot_timestamp};
use tzdesk_core::json::{header_to_json, operation_from_json, operation_to_json, timestamp_to_json};
use tzdesk_core::operation::Content;
use tzdesk_core::rights::{baker_at, baking_rights, current_rolls};
use tzdesk_core::sandbox::Sandbox;
use tzdesk_core::voting::{protocol, VotingState};
use tzdesk_core::{
    apply_operation, head_hash, head_level, head_timestamp, BlockEnv, BlockHash, Constants, Context, Mode,
    Operation, OperationHash, ProtocolError, Receipt,
};
use tzdesk_michelson::binary::decode_node;
use tzdesk_michelson::Address;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

/// An error reply: HTTP status and a JSON list of error objects.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcError {
    pub status: u16,
    pub body: Json,
}

impl RpcError {
    fn new(status: u16, id: &str, msg: impl Into<String>) -> RpcError {
        RpcError { status, body: json!([{"kind": "permanent", "id": id, "msg": msg.into()}]) }
    }

    pub fn not_found(path: &str) -> RpcError {
        RpcError::new(404, "rpc.not_found", format!("no service at {path}"))
    }

    pub fn decode(msg: impl Into<String>) -> RpcError {
        RpcError::new(400, "rpc.decode_error", msg)
    }

    pub fn protocol(e: &ProtocolError) -> RpcError {
        let status = if matches!(e, ProtocolError::Malformed(_)) { 400 } else { 500 };
        RpcError { status, body: json!([e.to_json()]) }
    }

    /// The `id` of the first error, e.g. `proto.counter_in_the_future`.
    pub fn id(&self) -> Option<&str> {
        self.body.get(0)?.get("id")?.as_str()
    }
}

impl std::fmt::Display for RpcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HTTP {}: {}", self.status, self.body)
    }
}

impl std::error::Error for RpcError {}

struct ChainState {
    sandbox: Sandbox,
    receipts: Vec<Vec<Receipt>>,
    mempool: Vec<Operation>,
    included: BTreeMap<OperationHash, (u64, BlockHash)>,
}

pub struct NodeService {
    state: RwLock<ChainState>,
}

fn decimal_strings(j: Json) -> Json {
    match j {
        Json::Number(n) => Json::String(n.to_string()),
        Json::Object(o) => Json::Object(o.into_iter().map(|(k, v)| (k, decimal_strings(v))).collect()),
        Json::Array(a) => Json::Array(a.into_iter().map(decimal_strings).collect()),
        other => other,
    }
}

fn next_env(ctx: &Context) -> BlockEnv {
    BlockEnv { level: head_level(ctx) + 1, timestamp: slot_timestamp(ctx, 0) }
}

fn check_fee(op: &Operation) -> Result<(), ProtocolError> {
    if op.contents.iter().any(|c| c.manager().is_some()) && op.total_fee() < op.minimal_fee() {
        return Err(ProtocolError::FeeTooLow { fee: op.total_fee(), minimal: op.minimal_fee() });
    }
    Ok(())
}

impl NodeService {
    /// A chain with the five sandbox bootstrap delegates, all baked locally.
    pub fn new(constants: Constants) -> NodeService {
        NodeService::from_sandbox(Sandbox::new(constants))
    }

    pub fn from_sandbox(sandbox: Sandbox) -> NodeService {
        let state = ChainState { sandbox, receipts: vec![], mempool: vec![], included: BTreeMap::new() };
        NodeService { state: RwLock::new(state) }
    }

    pub fn head(&self) -> Context {
        self.state.read().expect("chain lock").sandbox.ctx.clone()
    }

    /// Read access to the chain (blocks and the context after each).
    pub fn with_sandbox<R>(&self, f: impl FnOnce(&Sandbox) -> R) -> R {
        f(&self.state.read().expect("chain lock").sandbox)
    }

    pub fn mempool_len(&self) -> usize {
        self.state.read().expect("chain lock").mempool.len()
    }

    /// Bakes one block with the applicable mempool operations.
    pub fn bake(&self) -> BlockHash {
        let mut st = self.state.write().expect("chain lock");
        let block = st.sandbox.forge_next(&st.mempool);
        st.push(block, "forged block applies")
    }

    /// Replaces the top `depth` blocks by a heavier fork that carries none of
    /// their operations.
    pub fn reorg(&self, depth: u64) -> Result<BlockHash, RpcError> {
        let mut st = self.state.write().expect("chain lock");
        let level = st.sandbox.level();
        if depth == 0 || depth > level {
            return Err(RpcError::decode(format!("reorg depth must be in 1..={level}")));
        }
        let keep = (level - depth) as usize;
        st.sandbox.blocks.truncate(keep);
        st.sandbox.history.truncate(keep + 1);
        st.sandbox.ctx = st.sandbox.history[keep].clone();
        st.receipts.truncate(keep);
        st.included.retain(|_, (l, _)| *l <= keep as u64);
        st.mempool.clear();
        let ctx = st.sandbox.ctx.clone();
        let next = head_level(&ctx) + 1;
        let sk = (1..256)
            .find_map(|p| baker_at(&ctx, next, p).ok().and_then(|d| st.sandbox.keys.get(&d)).map(|k| (p, k.clone())))
            .expect("a known baker below priority 256");
        let block = bake(&ctx, &sk.1, sk.0, st.sandbox.endorse_head(), &[]);
        let mut head = st.push(block, "fork block applies");
        for _ in 0..depth {
            let block = st.sandbox.forge_next(&[]);
            head = st.push(block, "fork block applies");
        }
        Ok(head)
    }

    /// Validates against the head plus pending operations and queues.
    /// Re-injecting a known operation returns its hash.
    pub fn inject(&self, op: Operation) -> Result<OperationHash, RpcError> {
        let hash = op.hash();
        let mut st = self.state.write().expect("chain lock");
        if st.included.contains_key(&hash) || st.mempool.iter().any(|o| o.hash() == hash) {
            return Ok(hash);
        }
        check_fee(&op).map_err(|e| RpcError::protocol(&e))?;
        let env = next_env(&st.sandbox.ctx);
        let mut ctx = st.sandbox.ctx.clone();
        for pending in &st.mempool {
            if let Ok(a) = apply_operation(&ctx, pending, &env, Mode::Real) {
                ctx = a.ctx;
            }
        }
        apply_operation(&ctx, &op, &env, Mode::Real).map_err(|e| RpcError::protocol(&e))?;
        st.mempool.push(op);
        Ok(hash)
    }

    pub fn handle(&self, method: Method, path: &str, body: Option<&Json>) -> Result<Json, RpcError> {
        let (route, query) = path.split_once('?').unwrap_or((path, ""));
        let segs: Vec<&str> = route.split('/').filter(|s| !s.is_empty()).collect();
        let raw = body;
        let body = || raw.ok_or_else(|| RpcError::decode("missing request body"));
        match (method, segs.as_slice()) {
            (Method::Get, ["monitor", "bootstrapped"]) => {
                let ctx = self.head();
                Ok(json!({
                    "block": head_hash(&ctx).to_string(),
                    "timestamp": timestamp_to_json(head_timestamp(&ctx)),
                    "protocol": protocol(&ctx).to_string(),
                }))
            }
            (Method::Get, ["chains", "main", "chain_id"]) => Ok(json!(tzdesk_core::block::chain_id(&self.head()).to_string())),
            (Method::Get, ["chains", "main", "operations", h]) => self.operation_status(h),
            (Method::Get, ["chains", "main", "mempool", "pending_operations"]) => {
                let st = self.state.read().expect("chain lock");
                let applied: Vec<Json> = st
                    .mempool
                    .iter()
                    .map(|o| {
                        let mut j = operation_to_json(o);
                        j["hash"] = json!(o.hash().to_string());
                        j
                    })
                    .collect();
                Ok(json!({"applied": applied, "refused": []}))
            }
            (Method::Get, ["chains", "main", "blocks", id, rest @ ..]) => self.get_block(id, rest, route),
            (Method::Post, ["chains", "main", "blocks", id, "helpers", rest @ ..]) => {
                let ctx = self.resolve(id)?.1;
                match rest {
                    ["scripts", "run_operation"] => run_operation(&ctx, body()?),
                    ["preapply", "operations"] => preapply(&ctx, body()?),
                    ["forge", "operations"] => forge(body()?),
                    _ => Err(RpcError::not_found(route)),
                }
            }
            (Method::Post, ["injection", "operation"]) => {
                if !query.is_empty() && query != "chain=main" {
                    return Err(RpcError::not_found(path));
                }
                let hex_str = body()?.as_str().ok_or_else(|| RpcError::decode("expected a hex string"))?;
                let bytes = hex::decode(hex_str).map_err(|e| RpcError::decode(format!("invalid hex: {e}")))?;
                let op = Operation::from_bytes(&bytes).map_err(|e| RpcError::decode(e.to_string()))?;
                Ok(json!(self.inject(op)?.to_string()))
            }
            (Method::Post, ["tzdesk", "bake"]) => {
                let n = raw.map(|b| b.get("count").and_then(Json::as_u64).unwrap_or(1)).unwrap_or(1);
                let hashes: Vec<String> = (0..n).map(|_| self.bake().to_string()).collect();
                Ok(json!(hashes))
            }
            (Method::Post, ["tzdesk", "reorg"]) => {
                let depth = body()?.get("depth").and_then(Json::as_u64).ok_or_else(|| RpcError::decode("missing depth"))?;
                Ok(json!(self.reorg(depth)?.to_string()))
            }
            _ => Err(RpcError::not_found(route)),
        }
    }

    /// Level and context of a block id: `head`, `head~n`, `genesis`, a
    /// level or a block hash.
    fn resolve(&self, id: &str) -> Result<(u64, Context), RpcError> {
        let st = self.state.read().expect("chain lock");
        let top = st.sandbox.level();
        let level = match id {
            "head" => Some(top),
            "genesis" => Some(0),
            _ if id.starts_with("head~") => id[5..].parse::<u64>().ok().and_then(|d| top.checked_sub(d)),
            _ if id.starts_with("B:") => {
                let h: BlockHash = id.parse().map_err(|_| RpcError::decode(format!("bad block hash {id}")))?;
                if h == st.sandbox.genesis.hash {
                    Some(0)
                } else {
                    st.sandbox.blocks.iter().position(|b| b.hash() == h).map(|i| i as u64 + 1)
                }
            }
            _ => id.parse::<u64>().ok().filter(|l| *l <= top),
        };
        let level = level.ok_or_else(|| RpcError::not_found(&format!("/chains/main/blocks/{id}")))?;
        Ok((level, st.sandbox.history[level as usize].clone()))
    }

    fn operation_status(&self, h: &str) -> Result<Json, RpcError> {
        let hash: OperationHash = h.parse().map_err(|_| RpcError::decode(format!("bad operation hash {h}")))?;
        let st = self.state.read().expect("chain lock");
        let head = st.sandbox.level();
        if let Some((level, block)) = st.included.get(&hash) {
            let receipt = st.receipts[*level as usize - 1].iter().find(|r| r.hash == hash).map(Receipt::to_json);
            return Ok(json!({
                "hash": h,
                "status": "included",
                "level": level,
                "block": block.to_string(),
                "head_level": head,
                "confirmations": head - level,
                "receipt": receipt,
            }));
        }
        let status = if st.mempool.iter().any(|o| o.hash() == hash) { "pending" } else { "unknown" };
        Ok(json!({"hash": h, "status": status, "head_level": head}))
    }

    fn get_block(&self, id: &str, rest: &[&str], route: &str) -> Result<Json, RpcError> {
        let (level, ctx) = self.resolve(id)?;
        let block_json = || -> Json {
            let st = self.state.read().expect("chain lock");
            if level == 0 {
                return json!({"hash": st.sandbox.genesis.hash.to_string(), "header": {"level": 0}, "operations": []});
            }
            let b = &st.sandbox.blocks[level as usize - 1];
            let receipts: Vec<Json> = st.receipts[level as usize - 1].iter().map(Receipt::to_json).collect();
            let mut header = header_to_json(&b.header);
            header["hash"] = json!(b.hash().to_string());
            json!({
                "hash": b.hash().to_string(),
                "header": header,
                "metadata": {
                    "level": level,
                    "cycle": ctx.constants().cycle_of(level),
                    "protocol": protocol(&ctx).to_string(),
                    "baker": b.header.baker.to_string(),
                    "endorsements": b.endorsements.len(),
                },
                "operations": receipts,
            })
        };
        match rest {
            [] => Ok(block_json()),
            ["hash"] => Ok(json!(head_hash(&ctx).to_string())),
            ["header"] => Ok(block_json()["header"].clone()),
            ["protocols"] => Ok(json!({"protocol": protocol(&ctx).to_string(), "next_protocol": protocol(&ctx).to_string()})),
            ["context", "constants"] => Ok(decimal_strings(serde_json::to_value(ctx.constants()).expect("constants serialize"))),
            ["context", "contracts", addr, field @ ..] => contract(&ctx, addr, field, route),
            ["context", "delegates", addr] => {
                let d = parse_address(addr)?;
                if !ctx.is_delegate(&d) {
                    return Err(RpcError::not_found(route));
                }
                Ok(json!({
                    "balance": ctx.balance(&d).to_string(),
                    "frozen_balance": ctx.total_frozen(&d).to_string(),
                    "staking_balance": ctx.staking_balance(&d).to_string(),
                    "rolls": ctx.rolls_of(&d).map_err(|e| RpcError::protocol(&e))?.to_string(),
                }))
            }
            ["votes", "current_period_kind"] => Ok(json!(VotingState::load(&ctx).kind)),
            ["votes", "listings"] => {
                let rolls: Vec<Json> = current_rolls(&ctx).iter().map(|(d, r)| json!({"pkh": d.to_string(), "rolls": r})).collect();
                Ok(json!(rolls))
            }
            ["helpers", "baking_rights"] => {
                let next = head_level(&ctx) + 1;
                let rights = baking_rights(&ctx, next, 5).map_err(|e| RpcError::protocol(&e))?;
                Ok(json!(rights
                    .iter()
                    .enumerate()
                    .map(|(p, d)| json!({"level": next, "delegate": d.to_string(), "priority": p}))
                    .collect::<Vec<_>>()))
            }
            _ => Err(RpcError::not_found(route)),
        }
    }
}

impl ChainState {
    fn push(&mut self, block: tzdesk_core::Block, what: &str) -> BlockHash {
        let hashes: Vec<OperationHash> = block.operations.iter().map(Operation::hash).collect();
        let r = self.sandbox.apply(block).expect(what);
        let level = self.sandbox.level();
        let hash = head_hash(&self.sandbox.ctx);
        for h in hashes {
            self.included.insert(h, (level, hash));
        }
        self.receipts.push(r.receipts);
        let ctx = &self.sandbox.ctx;
        let env = next_env(ctx);
        let pending: Vec<Operation> = self.mempool.iter().filter(|o| !self.included.contains_key(&o.hash())).cloned().collect();
        self.mempool = select_operations(ctx, env.level, env.timestamp, &pending);
        hash
    }
}

fn parse_address(s: &str) -> Result<Address, RpcError> {
    s.parse().map_err(|_| RpcError::decode(format!("invalid address {s}")))
}

fn contract(ctx: &Context, addr: &str, field: &[&str], route: &str) -> Result<Json, RpcError> {
    let a = parse_address(addr)?;
    if !ctx.exists(&a) {
        return Err(RpcError::not_found(route));
    }
    let script = || -> Option<Json> {
        let code = decode_node(ctx.get(&["contracts", &a.to_string(), "code"])?).ok()?;
        Some(json!({"code": code.to_json(), "storage": load_storage(ctx, &a)?.to_json()}))
    };
    let delegate = || ctx.delegate_of(&a).map(|d| d.to_string());
    match field {
        [] => {
            let mut j = json!({"balance": ctx.balance(&a).to_string(), "delegate": delegate()});
            if a.is_implicit() {
                j["counter"] = json!(ctx.counter(&a).to_string());
            } else {
                j["script"] = script().unwrap_or(Json::Null);
                j["storage_size"] = json!(contract_size(ctx, &a).to_string());
            }
            Ok(j)
        }
        ["balance"] => Ok(json!(ctx.balance(&a).to_string())),
        ["counter"] => Ok(json!(ctx.counter(&a).to_string())),
        ["delegate"] => delegate().map(Json::String).ok_or_else(|| RpcError::not_found(route)),
        ["manager_key"] => {
            let mut j = json!({"manager": a.to_string()});
            if let Some(pk) = ctx.manager_key(&a) {
                j["key"] = json!(pk.to_string());
            }
            Ok(j)
        }
        ["storage"] => load_storage(ctx, &a).map(|v| v.to_json()).ok_or_else(|| RpcError::not_found(route)),
        ["script"] => script().ok_or_else(|| RpcError::not_found(route)),
        _ => Err(RpcError::not_found(route)),
    }
}

/// Accepts `{branch, contents, signature}` or `{operation: {...}}`.
fn operation_body(j: &Json) -> Result<Operation, RpcError> {
    let j = j.get("operation").unwrap_or(j);
    operation_from_json(j).map_err(|e| RpcError::protocol(&e))
}

fn run_operation(ctx: &Context, body: &Json) -> Result<Json, RpcError> {
    let op = operation_body(body)?;
    let a = apply_operation(ctx, &op, &next_env(ctx), Mode::Simulate).map_err(|e| RpcError::protocol(&e))?;
    Ok(a.receipt.to_json())
}

fn preapply(ctx: &Context, body: &Json) -> Result<Json, RpcError> {
    let ops = body.as_array().ok_or_else(|| RpcError::decode("expected a list of operations"))?;
    let env = next_env(ctx);
    let current = protocol(ctx).to_string();
    let mut c = ctx.clone();
    let mut out = Vec::new();
    for j in ops {
        match j.get("protocol").and_then(Json::as_str) {
            Some(p) if p == current => {}
            Some(p) => return Err(RpcError::decode(format!("protocol {p} is not the current protocol {current}"))),
            None => return Err(RpcError::decode("missing field `protocol`")),
        }
        let op = operation_body(j)?;
        check_fee(&op).map_err(|e| RpcError::protocol(&e))?;
        let a = apply_operation(&c, &op, &env, Mode::Real).map_err(|e| RpcError::protocol(&e))?;
        c = a.ctx;
        out.push(a.receipt.to_json());
    }
    Ok(Json::Array(out))
}

fn forge(body: &Json) -> Result<Json, RpcError> {
    let branch: BlockHash = body
        .get("branch")
        .and_then(Json::as_str)
        .ok_or_else(|| RpcError::decode("missing field `branch`"))?
        .parse()
        .map_err(|_| RpcError::decode("bad branch"))?;
    let contents = body
        .get("contents")
        .and_then(Json::as_array)
        .ok_or_else(|| RpcError::decode("missing field `contents`"))?
        .iter()
        .map(tzdesk_core::json::content_from_json)
        .collect::<Result<Vec<Content>, _>>()
        .map_err(|e| RpcError::protocol(&e))?;
    Ok(json!(hex::encode(Operation::forge_unsigned(&branch, &contents))))
}
