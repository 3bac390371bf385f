//! Operation validation and application.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde_json::{json, Value as Json};
use tzdesk_michelson::binary::{decode_node, encode_script, encode_value};
use tzdesk_michelson::gas::{MANAGER_BASE, TRANSACTION_BASE};
use tzdesk_michelson::syntax::{Node, NodeKind};
use tzdesk_michelson::{
    check_data, expand_macros, run_script, typecheck_program, Address, ContractTypes, Data, ExecEnv, ExecErrorKind,
    RawProgram, Ty, TypedProgram, Value,
};

use crate::context::Context;
use crate::crypto::{hash_parts, OperationHash, PublicKey};
use crate::error::ProtocolError;
use crate::header::{BlockHeader, Endorsement};
use crate::json::content_to_json;
use crate::operation::{activation_secret, Content, ManagerFields, Operation, Script};
use crate::voting;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Real,
    /// Accepts the all-zero signature placeholder.
    Simulate,
}

/// The block an operation is being applied in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEnv {
    pub level: u64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Applied,
    Failed,
    Backtracked,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Applied => "applied",
            Status::Failed => "failed",
            Status::Backtracked => "backtracked",
            Status::Skipped => "skipped",
        }
    }
}

/// Script entry and exit, in execution order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Enter(Address),
    Exit(Address),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InternalReceipt {
    pub source: Address,
    pub destination: Address,
    pub amount: u64,
    pub parameters: Value,
    pub status: Status,
    pub consumed_gas: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentResult {
    pub status: Status,
    pub consumed_gas: u64,
    pub storage_size: u64,
    pub paid_storage_size_diff: u64,
    pub burned: u64,
    pub minted: u64,
    pub originated: Vec<Address>,
    pub errors: Vec<ProtocolError>,
    pub internal: Vec<InternalReceipt>,
}

impl ContentResult {
    fn new(status: Status) -> ContentResult {
        ContentResult {
            status,
            consumed_gas: 0,
            storage_size: 0,
            paid_storage_size_diff: 0,
            burned: 0,
            minted: 0,
            originated: vec![],
            errors: vec![],
            internal: vec![],
        }
    }

    /// Gas of the content including its internal operations.
    pub fn total_gas(&self) -> u64 {
        self.consumed_gas + self.internal.iter().map(|i| i.consumed_gas).sum::<u64>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub hash: OperationHash,
    pub operation: Operation,
    pub results: Vec<ContentResult>,
}

impl Receipt {
    pub fn succeeded(&self) -> bool {
        self.results.iter().all(|r| r.status == Status::Applied)
    }

    pub fn to_json(&self) -> Json {
        let contents: Vec<Json> = self
            .operation
            .contents
            .iter()
            .zip(&self.results)
            .map(|(c, r)| {
                let mut j = content_to_json(c);
                j["metadata"] = result_json(r);
                j
            })
            .collect();
        json!({
            "hash": self.hash.to_string(),
            "branch": self.operation.branch.to_string(),
            "contents": contents,
            "signature": self.operation.signature.to_string(),
        })
    }
}

fn result_json(r: &ContentResult) -> Json {
    let mut res = json!({
        "status": r.status.name(),
        "consumed_gas": r.consumed_gas.to_string(),
    });
    if r.storage_size > 0 {
        res["storage_size"] = json!(r.storage_size.to_string());
    }
    if r.paid_storage_size_diff > 0 {
        res["paid_storage_size_diff"] = json!(r.paid_storage_size_diff.to_string());
    }
    if r.burned > 0 {
        res["burned"] = json!(r.burned.to_string());
    }
    if r.minted > 0 {
        res["minted"] = json!(r.minted.to_string());
    }
    if !r.originated.is_empty() {
        res["originated_contracts"] = json!(r.originated.iter().map(|a| a.to_string()).collect::<Vec<_>>());
    }
    if !r.errors.is_empty() {
        res["errors"] = Json::Array(r.errors.iter().map(ProtocolError::to_json).collect());
    }
    let internal: Vec<Json> = r
        .internal
        .iter()
        .map(|i| {
            json!({
                "kind": "transaction",
                "source": i.source.to_string(),
                "destination": i.destination.to_string(),
                "amount": i.amount.to_string(),
                "parameters": i.parameters.to_json(),
                "result": {"status": i.status.name(), "consumed_gas": i.consumed_gas.to_string()},
            })
        })
        .collect();
    json!({"operation_result": res, "internal_operation_results": internal})
}

#[derive(Debug)]
pub struct Applied {
    pub ctx: Context,
    pub receipt: Receipt,
    pub trace: Vec<Frame>,
}

impl ContractTypes for Context {
    fn parameter_type(&self, addr: &Address) -> Option<Ty> {
        if addr.is_implicit() {
            Some(Ty::Unit)
        } else {
            self.script(addr).map(|p| p.parameter.clone())
        }
    }
}

enum Class {
    Manager(Address),
    Activation,
    Evidence,
    Vote(Address),
}

fn classify(op: &Operation) -> Result<Class, ProtocolError> {
    let first = op.contents.first().ok_or(ProtocolError::EmptyOperation)?;
    let class = match first {
        Content::Activation { .. } => Class::Activation,
        Content::DoubleBaking { .. } | Content::DoubleEndorsement { .. } => Class::Evidence,
        Content::Proposals { source, .. } | Content::Ballot { source, .. } => {
            if op.contents.len() != 1 {
                return Err(ProtocolError::InvalidBatch("votes cannot be batched"));
            }
            Class::Vote(*source)
        }
        c => Class::Manager(c.manager().expect("manager content").source),
    };
    let same = op.contents.iter().all(|c| match (&class, c) {
        (Class::Manager(s), c) => c.manager().is_some_and(|m| m.source == *s),
        (Class::Activation, Content::Activation { .. }) => true,
        (Class::Evidence, Content::DoubleBaking { .. } | Content::DoubleEndorsement { .. }) => true,
        (Class::Vote(_), _) => true,
        _ => false,
    });
    if !same {
        return Err(ProtocolError::InvalidBatch("contents must share one kind and source"));
    }
    Ok(class)
}

fn check_sig(op: &Operation, pk: &PublicKey, mode: Mode) -> Result<(), ProtocolError> {
    if mode == Mode::Simulate && op.signature.is_any() {
        return Ok(());
    }
    if op.check_signature(pk) {
        Ok(())
    } else {
        Err(ProtocolError::InvalidSignature)
    }
}

/// Checks everything that makes an operation includable: signature,
/// counters, limits and the source's ability to pay.
pub fn validate_operation(ctx: &Context, op: &Operation, mode: Mode) -> Result<(), ProtocolError> {
    match classify(op)? {
        Class::Manager(source) => validate_manager(ctx, op, &source, mode),
        Class::Vote(source) => {
            let pk = ctx.manager_key(&source).ok_or(ProtocolError::UnrevealedKey(source))?;
            check_sig(op, &pk, mode)
        }
        Class::Activation | Class::Evidence => Ok(()),
    }
}

fn validate_manager(ctx: &Context, op: &Operation, source: &Address, mode: Mode) -> Result<(), ProtocolError> {
    let k = ctx.constants();
    let key = match (ctx.manager_key(source), &op.contents[0]) {
        (Some(pk), _) => pk,
        (None, Content::Reveal { public_key, .. }) => {
            if public_key.address() != *source {
                return Err(ProtocolError::InconsistentRevealKey(*source));
            }
            *public_key
        }
        (None, _) => return Err(ProtocolError::UnrevealedKey(*source)),
    };
    check_sig(op, &key, mode)?;
    let current = ctx.counter(source);
    let mut spend: u64 = 0;
    for (i, c) in op.contents.iter().enumerate() {
        let m = c.manager().expect("classified as manager");
        let expected = current + 1 + i as u64;
        if m.counter < expected {
            return Err(ProtocolError::CounterInThePast { contract: *source, expected, found: m.counter });
        }
        if m.counter > expected {
            return Err(ProtocolError::CounterInTheFuture { contract: *source, expected, found: m.counter });
        }
        if m.gas_limit > k.hard_gas_limit_per_operation {
            return Err(ProtocolError::GasLimitTooHigh(m.gas_limit));
        }
        if m.storage_limit > k.hard_storage_limit_per_operation {
            return Err(ProtocolError::StorageLimitTooHigh(m.storage_limit));
        }
        if i > 0 && matches!(c, Content::Reveal { .. }) {
            return Err(ProtocolError::InvalidBatch("reveal must come first"));
        }
        if i == 0 && matches!(c, Content::Reveal { .. }) && ctx.manager_key(source).is_some() {
            return Err(ProtocolError::PreviouslyRevealed(*source));
        }
        let moved = match c {
            Content::Transaction { amount, .. } => *amount,
            Content::Origination { balance, .. } => *balance,
            _ => 0,
        };
        spend = spend.saturating_add(m.fee).saturating_add(moved);
    }
    let balance = ctx.balance(source);
    if balance < spend {
        return Err(ProtocolError::BalanceTooLow { contract: *source, balance, amount: spend });
    }
    Ok(())
}

/// Validates and applies one operation. `Err` means the operation cannot
/// be included; failures past validation are reported in the receipt with
/// fees kept.
pub fn apply_operation(ctx: &Context, op: &Operation, env: &BlockEnv, mode: Mode) -> Result<Applied, ProtocolError> {
    validate_operation(ctx, op, mode)?;
    let hash = op.hash();
    let mut trace = Vec::new();
    let (ctx, results) = match classify(op)? {
        Class::Manager(source) => apply_manager(ctx, op, &source, &hash, env, &mut trace)?,
        _ => {
            let mut c = ctx.clone();
            let mut results = Vec::new();
            for content in &op.contents {
                results.push(apply_special(&mut c, content, env)?);
            }
            (c, results)
        }
    };
    Ok(Applied { ctx, receipt: Receipt { hash, operation: op.clone(), results }, trace })
}

fn apply_manager(
    ctx: &Context,
    op: &Operation,
    source: &Address,
    hash: &OperationHash,
    env: &BlockEnv,
    trace: &mut Vec<Frame>,
) -> Result<(Context, Vec<ContentResult>), ProtocolError> {
    let mut c = ctx.clone();
    for content in &op.contents {
        let m = content.manager().expect("manager content");
        c.pay_fee(source, m.fee)?;
        c.set_counter(source, m.counter);
    }
    let after_fees = c.clone();
    let mut results: Vec<ContentResult> = Vec::new();
    let mut failed = false;
    for (index, content) in op.contents.iter().enumerate() {
        if failed {
            results.push(ContentResult::new(Status::Skipped));
            continue;
        }
        let mut r = ContentResult::new(Status::Applied);
        let mut gas = Gas { used: 0, limit: content.manager().expect("manager").gas_limit };
        let outcome = {
            let mut run = Run { ctx: &mut c, env, source: *source, gas: &mut gas, result: &mut r, trace };
            run.content(content, index as u32, hash)
        };
        r.consumed_gas = gas.used - r.internal.iter().map(|i| i.consumed_gas).sum::<u64>();
        if let Err(e) = outcome {
            failed = true;
            r.status = Status::Failed;
            r.errors.push(e);
            for i in r.internal.iter_mut().filter(|i| i.status == Status::Applied) {
                i.status = Status::Backtracked;
            }
        }
        results.push(r);
    }
    if failed {
        for r in results.iter_mut().filter(|r| r.status == Status::Applied) {
            r.status = Status::Backtracked;
            for i in &mut r.internal {
                i.status = Status::Backtracked;
            }
        }
        c = after_fees;
    }
    Ok((c, results))
}

struct Gas {
    used: u64,
    limit: u64,
}

impl Gas {
    fn charge(&mut self, amount: u64) -> Result<(), ProtocolError> {
        self.used += amount;
        if self.used > self.limit {
            self.used = self.limit;
            return Err(ProtocolError::GasExhausted);
        }
        Ok(())
    }

    fn remaining(&self) -> u64 {
        self.limit - self.used
    }
}

struct Run<'a> {
    ctx: &'a mut Context,
    env: &'a BlockEnv,
    source: Address,
    gas: &'a mut Gas,
    result: &'a mut ContentResult,
    trace: &'a mut Vec<Frame>,
}

enum Param<'a> {
    Literal(&'a Node),
    Value(Value),
}

/// Stored size of a contract: script bytes plus storage bytes.
pub fn contract_size(ctx: &Context, a: &Address) -> u64 {
    let s = a.to_string();
    (ctx.get(&["contracts", &s, "code"]).map_or(0, <[u8]>::len) + ctx.get(&["contracts", &s, "storage"]).map_or(0, <[u8]>::len)) as u64
}

/// Current storage of an originated contract.
pub fn load_storage(ctx: &Context, a: &Address) -> Option<Value> {
    let p = ctx.script(a)?;
    let bytes = ctx.get(&["contracts", &a.to_string(), "storage"])?;
    let node = decode_node(bytes).expect("stored storage decodes");
    let data = Data::from_node(&node).expect("stored storage is data");
    Some(check_data(&data, &p.storage).expect("stored storage is well typed"))
}

/// Typechecks a script as found in an origination.
pub fn load_script(code: &Node) -> Result<TypedProgram, ProtocolError> {
    let NodeKind::Seq(sections) = &code.kind else {
        return Err(ProtocolError::ScriptRejected("code must be a sequence of sections".into()));
    };
    let raw = RawProgram::from_nodes(sections).map_err(|e| ProtocolError::ScriptRejected(e.to_string()))?;
    let expanded = expand_macros(&raw).map_err(|e| ProtocolError::ScriptRejected(e.to_string()))?;
    typecheck_program(&expanded).map_err(|e| ProtocolError::ScriptRejected(e.to_string()))
}

pub fn originated_address(hash: &OperationHash, index: u32) -> Address {
    let h = hash_parts(&[&hash.0, &index.to_be_bytes()]);
    Address::originated(h[..20].try_into().expect("20 bytes"))
}

impl Run<'_> {
    fn content(&mut self, content: &Content, index: u32, hash: &OperationHash) -> Result<(), ProtocolError> {
        match content {
            Content::Reveal { public_key, .. } => {
                self.gas.charge(MANAGER_BASE)?;
                self.ctx.set_manager_key(&self.source, public_key);
                Ok(())
            }
            Content::Delegation { delegate, .. } => {
                self.gas.charge(MANAGER_BASE)?;
                self.ctx.set_delegate(&self.source, *delegate)
            }
            Content::Origination { m, balance, delegate, script } => self.originate(m, *balance, *delegate, script, index, hash),
            Content::Transaction { m, amount, destination, parameters } => {
                let unit = Node::prim("Unit", vec![]);
                let p = Param::Literal(parameters.as_ref().unwrap_or(&unit));
                self.transaction(m, *amount, destination, p)
            }
            _ => unreachable!("non-manager content in a manager batch"),
        }
    }

    fn originate(
        &mut self,
        m: &ManagerFields,
        balance: u64,
        delegate: Option<Address>,
        script: &Script,
        index: u32,
        hash: &OperationHash,
    ) -> Result<(), ProtocolError> {
        self.gas.charge(MANAGER_BASE)?;
        let program = load_script(&script.code)?;
        self.gas.charge(program.typecheck_gas())?;
        let data = Data::from_node(&script.storage).map_err(|e| ProtocolError::ScriptRejected(e.to_string()))?;
        let storage = check_data(&data, &program.storage).map_err(|e| ProtocolError::ScriptRejected(e.to_string()))?;
        let addr = originated_address(hash, index);
        let a = addr.to_string();
        self.ctx.transfer(&self.source, &addr, balance)?;
        self.ctx.set(&["contracts", &a, "code"], encode_script(&program));
        self.ctx.set(&["contracts", &a, "storage"], encode_value(&storage));
        self.ctx.set(&["contracts", &a, "manager"], self.source.to_bytes().to_vec());
        self.ctx.set_script(addr, Arc::new(program));
        if delegate.is_some() {
            self.ctx.set_delegate(&addr, delegate)?;
        }
        self.result.originated.push(addr);
        let size = contract_size(self.ctx, &addr);
        self.ctx.set_u64(&["contracts", &a, "paid_bytes"], size);
        self.result.storage_size = size;
        self.pay_storage(m, size)
    }

    fn pay_storage(&mut self, m: &ManagerFields, new_bytes: u64) -> Result<(), ProtocolError> {
        self.result.paid_storage_size_diff += new_bytes;
        if self.result.paid_storage_size_diff > m.storage_limit {
            return Err(ProtocolError::StorageLimitExceeded { used: self.result.paid_storage_size_diff, limit: m.storage_limit });
        }
        let cost = new_bytes * self.ctx.constants().cost_per_byte;
        self.ctx.burn(&self.source, cost)?;
        self.result.burned += cost;
        Ok(())
    }

    fn transaction(&mut self, m: &ManagerFields, amount: u64, dest: &Address, param: Param<'_>) -> Result<(), ProtocolError> {
        let mut queue = VecDeque::new();
        let mut touched = BTreeMap::new();
        self.gas.charge(TRANSACTION_BASE)?;
        let source = self.source;
        self.call(&source, dest, amount, param, &mut queue, &mut touched)?;
        while let Some((emitter, iop)) = queue.pop_front() {
            let iop: tzdesk_michelson::InternalOp = iop;
            let before = self.gas.used;
            self.result.internal.push(InternalReceipt {
                source: emitter,
                destination: iop.destination,
                amount: iop.amount,
                parameters: iop.parameter.clone(),
                status: Status::Failed,
                consumed_gas: 0,
            });
            let outcome = self
                .gas
                .charge(TRANSACTION_BASE)
                .and_then(|_| self.call(&emitter, &iop.destination, iop.amount, Param::Value(iop.parameter), &mut queue, &mut touched));
            let last = self.result.internal.last_mut().expect("just pushed");
            last.consumed_gas = self.gas.used - before;
            outcome?;
            last.status = Status::Applied;
        }
        if let Some(size) = touched.get(dest) {
            self.result.storage_size = *size;
        }
        for (addr, size) in touched {
            let a = addr.to_string();
            let paid_path = ["contracts", &a, "paid_bytes"];
            let paid = self.ctx.get_u64(&paid_path);
            if size > paid {
                self.ctx.set_u64(&paid_path, size);
                self.pay_storage(m, size - paid)?;
            }
        }
        Ok(())
    }

    /// Moves tokens and runs the destination's script, queueing what it emits.
    fn call(
        &mut self,
        sender: &Address,
        dest: &Address,
        amount: u64,
        param: Param<'_>,
        queue: &mut VecDeque<(Address, tzdesk_michelson::InternalOp)>,
        touched: &mut BTreeMap<Address, u64>,
    ) -> Result<(), ProtocolError> {
        if !dest.is_implicit() && !self.ctx.exists(dest) {
            return Err(ProtocolError::UnknownContract(*dest));
        }
        self.ctx.transfer(sender, dest, amount)?;
        let Some(program) = self.ctx.script(dest) else {
            let is_unit = match &param {
                Param::Literal(n) => matches!(&n.kind, NodeKind::Prim(p, a) if p == "Unit" && a.is_empty()),
                Param::Value(v) => *v == Value::Unit,
            };
            if !is_unit {
                return Err(ProtocolError::BadParameter { contract: *dest, reason: "implicit accounts only take Unit".into() });
            }
            return Ok(());
        };
        let param = match param {
            Param::Value(v) => v,
            Param::Literal(n) => {
                let bad = |reason: String| ProtocolError::BadParameter { contract: *dest, reason };
                let data = Data::from_node(n).map_err(|e| bad(e.to_string()))?;
                check_data(&data, &program.parameter).map_err(|e| bad(e.to_string()))?
            }
        };
        let storage = load_storage(self.ctx, dest).expect("originated contract has storage");
        let env = ExecEnv {
            amount,
            sender: *sender,
            source: self.source,
            self_address: *dest,
            balance: self.ctx.balance(dest),
            now: self.env.timestamp,
            gas_limit: self.gas.remaining(),
            contracts: &*self.ctx,
        };
        self.trace.push(Frame::Enter(*dest));
        let out = run_script(&program, param, storage, &env);
        self.trace.push(Frame::Exit(*dest));
        match out {
            Ok(r) => {
                self.gas.charge(r.gas_consumed)?;
                let bytes = encode_value(&r.storage);
                self.ctx.set(&["contracts", &dest.to_string(), "storage"], bytes);
                touched.insert(*dest, contract_size(self.ctx, dest));
                queue.extend(r.operations.into_iter().map(|o| (*dest, o)));
                Ok(())
            }
            Err(e) => {
                let _ = self.gas.charge(e.gas_consumed);
                Err(match e.kind {
                    ExecErrorKind::GasExhausted => {
                        self.gas.used = self.gas.limit;
                        ProtocolError::GasExhausted
                    }
                    ExecErrorKind::ScriptFailed(v) => ProtocolError::ScriptFailed { contract: *dest, with: v.to_string() },
                    ExecErrorKind::StackShape(s) => ProtocolError::ScriptRejected(format!("ill-shaped stack at {s}")),
                })
            }
        }
    }
}

fn apply_special(c: &mut Context, content: &Content, env: &BlockEnv) -> Result<ContentResult, ProtocolError> {
    let mut r = ContentResult::new(Status::Applied);
    match content {
        Content::Activation { pkh, secret, amount } => {
            if !pkh.is_implicit() || *secret != activation_secret(pkh, *amount) {
                return Err(ProtocolError::InvalidActivation);
            }
            if c.contains(&["activated", &pkh.to_string()]) {
                return Err(ProtocolError::AlreadyActivated(*pkh));
            }
            c.set(&["activated", &pkh.to_string()], vec![1]);
            c.mint(pkh, *amount)?;
            r.minted = *amount;
        }
        Content::Proposals { source, period, proposals } => voting::apply_proposals(c, source, *period, proposals)?,
        Content::Ballot { source, period, proposal, ballot } => voting::apply_ballot(c, source, *period, proposal, *ballot)?,
        Content::DoubleBaking { bh1, bh2 } => r.burned = apply_double_baking(c, bh1, bh2, env)?,
        Content::DoubleEndorsement { e1, e2 } => r.burned = apply_double_endorsement(c, e1, e2, env)?,
        _ => unreachable!("manager content outside a manager batch"),
    }
    Ok(r)
}

fn check_window(c: &Context, level: u64, env: &BlockEnv) -> Result<(), ProtocolError> {
    let k = c.constants();
    if level >= env.level {
        return Err(ProtocolError::InvalidEvidence("evidence is not in the past"));
    }
    if k.cycle_of(env.level) - k.cycle_of(level) > k.preserved_cycles {
        return Err(ProtocolError::OutdatedEvidence(level));
    }
    Ok(())
}

fn denounce(c: &mut Context, offender: &Address, level: u64, kind: &str) -> Result<u64, ProtocolError> {
    let (o, l) = (offender.to_string(), level.to_string());
    let path = ["denounced", &o, &l, kind];
    if c.contains(&path) {
        return Err(ProtocolError::AlreadyDenounced { delegate: *offender, level });
    }
    c.set(&path, vec![1]);
    Ok(c.burn_all_frozen(offender))
}

/// Two distinct headers signed by the same baker for the same level.
pub fn apply_double_baking(c: &mut Context, bh1: &BlockHeader, bh2: &BlockHeader, env: &BlockEnv) -> Result<u64, ProtocolError> {
    if bh1.level != bh2.level {
        return Err(ProtocolError::InvalidEvidence("headers at different levels"));
    }
    if bh1.baker != bh2.baker {
        return Err(ProtocolError::InvalidEvidence("headers from different bakers"));
    }
    if bh1.hash() >= bh2.hash() {
        return Err(ProtocolError::InvalidEvidence("headers must be distinct and in hash order"));
    }
    let pk = c.manager_key(&bh1.baker).ok_or(ProtocolError::InvalidEvidence("unknown baker key"))?;
    if !bh1.check_signature(&pk) || !bh2.check_signature(&pk) {
        return Err(ProtocolError::InvalidEvidence("bad header signature"));
    }
    check_window(c, bh1.level, env)?;
    denounce(c, &bh1.baker, bh1.level, "baking")
}

/// Two distinct endorsements signed by the same delegate for the same level.
pub fn apply_double_endorsement(c: &mut Context, e1: &Endorsement, e2: &Endorsement, env: &BlockEnv) -> Result<u64, ProtocolError> {
    if e1.level != e2.level {
        return Err(ProtocolError::InvalidEvidence("endorsements at different levels"));
    }
    if e1.delegate != e2.delegate {
        return Err(ProtocolError::InvalidEvidence("endorsements from different delegates"));
    }
    if e1.block == e2.block {
        return Err(ProtocolError::InvalidEvidence("endorsements for the same block"));
    }
    if e1.hash() >= e2.hash() {
        return Err(ProtocolError::InvalidEvidence("endorsements must be in hash order"));
    }
    let pk = c.manager_key(&e1.delegate).ok_or(ProtocolError::InvalidEvidence("unknown delegate key"))?;
    if !e1.check_signature(&pk) || !e2.check_signature(&pk) {
        return Err(ProtocolError::InvalidEvidence("bad endorsement signature"));
    }
    check_window(c, e1.level, env)?;
    denounce(c, &e1.delegate, e1.level, "endorsement")
}
