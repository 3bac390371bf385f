//! Commands that talk to a node. Operations are built with the node's
//! help: read the counter, key, constants and head, simulate with a
//! placeholder signature, size the limits and fee from the simulation,
//! preapply the signed operation, inject it and cross-check the encoding.

use serde_json::{json, Value as Json};
use tzdesk_core::json::{operation_to_json, u64_of};
use tzdesk_core::{BlockHash, Content, ManagerFields, Operation, OperationHash};
use tzdesk_michelson::syntax::Node;
use tzdesk_michelson::Address;
use tzdesk_node::{FaucetFile, Method};

use crate::error::{ClientError, Result};
use crate::transport::{method_name, Transport};
use crate::wallet::Wallet;

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub method: &'static str,
    pub path: String,
    pub request: Option<Json>,
    pub status: u16,
    pub response: Json,
}

/// What a manager operation does, before limits and fees are known.
#[derive(Debug, Clone)]
pub enum Action {
    Transfer { amount: u64, destination: Address, parameters: Option<Node> },
    Originate { balance: u64, script: tzdesk_core::Script },
}

#[derive(Debug, Clone, Default)]
pub struct SubmitOptions {
    /// Upper bound on the total fee. `None` pays the minimal fee.
    pub fee: Option<u64>,
    pub burn_cap: u64,
    /// Inject even when the simulation reports a failure.
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct Submitted {
    pub hash: OperationHash,
    pub operation: Operation,
    pub chain_id: String,
    /// Receipt of the signed operation as preapplied by the node.
    pub receipt: Json,
}

impl Submitted {
    /// Contracts created by the operation.
    pub fn originated(&self) -> Vec<Address> {
        self.receipt["contents"]
            .as_array()
            .into_iter()
            .flatten()
            .flat_map(|c| c["metadata"]["operation_result"]["originated_contracts"].as_array().cloned().unwrap_or_default())
            .filter_map(|a| a.as_str().and_then(|s| s.parse().ok()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub level: u64,
    pub block: String,
    pub confirmations: u64,
    /// Receipt of the operation in its block.
    pub receipt: Json,
}

pub struct Client<T: Transport> {
    pub transport: T,
    pub wallet: Wallet,
    /// Echo every request and reply on stderr.
    pub verbose: bool,
    pub log: Vec<LogEntry>,
    /// Polls before `wait_for` gives up.
    pub max_polls: u64,
}

fn contract_path(a: &Address, field: &str) -> String {
    format!("/chains/main/blocks/head/context/contracts/{a}/{field}")
}

fn content_results(receipt: &Json) -> Vec<&Json> {
    receipt["contents"].as_array().map(|c| c.iter().collect()).unwrap_or_default()
}

/// First failing result of a receipt, as `(status, errors)`.
fn failure(receipt: &Json) -> Option<(String, Json)> {
    content_results(receipt).into_iter().find_map(|c| {
        let r = &c["metadata"]["operation_result"];
        let status = r["status"].as_str().unwrap_or("missing");
        (status != "applied").then(|| (status.to_string(), r["errors"].clone()))
    })
}

/// Gas of a content result including its internal operations.
fn used_gas(c: &Json) -> u64 {
    let own = u64_of(&c["metadata"]["operation_result"]["consumed_gas"]).unwrap_or(0);
    let internal: u64 = c["metadata"]["internal_operation_results"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|i| u64_of(&i["result"]["consumed_gas"]))
        .sum();
    own + internal
}

/// A protocol error reply to a simulation: the operation cannot apply.
fn refused(e: ClientError) -> ClientError {
    match e {
        ClientError::Rpc { status: 500, body, .. } => ClientError::SimulationFailed { status: "refused".into(), errors: body },
        e => e,
    }
}

/// Charges `100 + ceil(gas / 10)` per content plus the forged size on the
/// last one, repeating until the size no longer grows with the fee.
pub fn settle_fees(branch: BlockHash, contents: &mut [Content]) -> u64 {
    for c in contents.iter_mut() {
        let m = c.manager_mut().expect("manager content");
        m.fee = 100 + m.gas_limit.div_ceil(10);
    }
    loop {
        let op = Operation::unsigned(branch, contents.to_vec());
        let (minimal, paid) = (op.minimal_fee(), op.total_fee());
        if paid >= minimal {
            return paid;
        }
        let last = contents.last_mut().and_then(Content::manager_mut).expect("manager content");
        last.fee += minimal - paid;
    }
}

impl<T: Transport> Client<T> {
    pub fn new(transport: T, wallet: Wallet) -> Client<T> {
        Client { transport, wallet, verbose: false, log: vec![], max_polls: 600 }
    }

    fn call(&mut self, method: Method, path: &str, body: Option<Json>) -> Result<Json> {
        let n = self.log.len();
        if self.verbose {
            eprintln!(">>>>{n}: {} {path}", method_name(method));
            if let Some(b) = &body {
                eprintln!("  {b}");
            }
        }
        let out = self.transport.call(method, path, body.as_ref());
        let (status, response) = match &out {
            Ok(j) => (200, j.clone()),
            Err(ClientError::Rpc { status, body, .. }) => (*status, body.clone()),
            Err(e) => (0, json!(e.to_string())),
        };
        if self.verbose {
            eprintln!("<<<<{n}: {status}\n  {response}");
        }
        self.log.push(LogEntry { method: method_name(method), path: path.to_string(), request: body, status, response });
        out
    }

    pub fn get(&mut self, path: &str) -> Result<Json> {
        self.call(Method::Get, path, None)
    }

    pub fn post(&mut self, path: &str, body: Json) -> Result<Json> {
        self.call(Method::Post, path, Some(body))
    }

    /// Request paths logged so far, in order.
    pub fn logged_paths(&self) -> Vec<String> {
        self.log.iter().map(|e| e.path.clone()).collect()
    }

    fn number(&mut self, path: &str) -> Result<u64> {
        let j = self.get(path)?;
        u64_of(&j).ok_or_else(|| ClientError::BadReply { path: path.to_string(), reply: j })
    }

    fn text(&mut self, path: &str) -> Result<String> {
        let j = self.get(path)?;
        j.as_str().map(String::from).ok_or_else(|| ClientError::BadReply { path: path.to_string(), reply: j })
    }

    pub fn head_hash(&mut self) -> Result<BlockHash> {
        let path = "/chains/main/blocks/head/hash";
        let s = self.text(path)?;
        s.parse().map_err(|_| ClientError::BadReply { path: path.into(), reply: json!(s) })
    }

    pub fn head_level(&mut self) -> Result<u64> {
        let path = "/chains/main/blocks/head/header";
        let h = self.get(path)?;
        u64_of(&h["level"]).ok_or_else(|| ClientError::BadReply { path: path.into(), reply: h })
    }

    /// Balance in mutez; accounts the node has never seen hold nothing.
    pub fn balance(&mut self, name: &str) -> Result<u64> {
        let a = self.wallet.resolve(name)?;
        match self.number(&contract_path(&a, "balance")) {
            Err(ClientError::Rpc { status: 404, .. }) if a.is_implicit() => Ok(0),
            other => other,
        }
    }

    /// Current storage of a contract, as an expression.
    pub fn storage(&mut self, name: &str) -> Result<Node> {
        let a = self.wallet.resolve(name)?;
        let path = contract_path(&a, "storage");
        let j = match self.get(&path) {
            Err(ClientError::Rpc { status: 404, .. }) => return Err(ClientError::NotAContract(a)),
            other => other?,
        };
        Node::from_json(&j).map_err(|_| ClientError::BadReply { path, reply: j })
    }

    /// Builds, simulates, signs, preapplies and injects a manager operation.
    pub fn submit(&mut self, source: &str, actions: Vec<Action>, opts: &SubmitOptions) -> Result<Submitted> {
        let sk = self.wallet.secret_key(source)?;
        let src = sk.public_key().address();
        let counter = self.number(&contract_path(&src, "counter"))?;
        let revealed = self.get(&contract_path(&src, "manager_key"))?.get("key").is_some_and(|k| !k.is_null());
        let boot = self.get("/monitor/bootstrapped")?;
        let protocol = boot["protocol"].as_str().unwrap_or_default().to_string();
        let constants = self.get("/chains/main/blocks/head/context/constants")?;
        let hard_gas = u64_of(&constants["hard_gas_limit_per_operation"]).unwrap_or(400_000);
        let hard_storage = u64_of(&constants["hard_storage_limit_per_operation"]).unwrap_or(60_000);
        let cost_per_byte = u64_of(&constants["cost_per_byte"]).unwrap_or(1_000);
        let branch = self.head_hash()?;
        let chain_id = self.text("/chains/main/chain_id")?;

        let mut contents = Vec::new();
        let mut next = counter;
        let mut fields = |fee| {
            next += 1;
            ManagerFields { source: src, fee, counter: next, gas_limit: hard_gas, storage_limit: hard_storage }
        };
        if !revealed {
            contents.push(Content::Reveal { m: fields(0), public_key: sk.public_key() });
        }
        let n = actions.len();
        for (i, a) in actions.into_iter().enumerate() {
            let fee = if i + 1 == n { opts.fee.unwrap_or(0) } else { 0 };
            contents.push(match a {
                Action::Transfer { amount, destination, parameters } => {
                    Content::Transaction { m: fields(fee), amount, destination, parameters }
                }
                Action::Originate { balance, script } => Content::Origination { m: fields(fee), balance, delegate: None, script },
            });
        }

        let mut sim = operation_to_json(&Operation::unsigned(branch, contents.clone()));
        sim["signature"] = json!("ANY_SIGNATURE");
        let simulated = self.post("/chains/main/blocks/head/helpers/scripts/run_operation", sim).map_err(refused)?;
        if let Some((status, errors)) = failure(&simulated) {
            if !opts.force {
                return Err(ClientError::SimulationFailed { status, errors });
            }
        }
        let results = content_results(&simulated);
        let mut burn = 0;
        for (c, r) in contents.iter_mut().zip(&results) {
            let m = c.manager_mut().expect("manager content");
            m.gas_limit = (used_gas(r) + 100).min(hard_gas);
            m.storage_limit = u64_of(&r["metadata"]["operation_result"]["paid_storage_size_diff"]).unwrap_or(0);
            burn += m.storage_limit * cost_per_byte;
        }
        if burn > opts.burn_cap {
            return Err(ClientError::BurnCapExceeded { burn, cap: opts.burn_cap });
        }
        let minimal = settle_fees(branch, &mut contents);
        if let Some(cap) = opts.fee {
            if cap < minimal {
                return Err(ClientError::FeeTooLow { fee: cap, minimal });
            }
        }

        let op = Operation::sign(branch, contents, &sk);
        let mut signed = operation_to_json(&op);
        signed["protocol"] = json!(protocol);
        let preapplied = self.post("/chains/main/blocks/head/helpers/preapply/operations", json!([signed])).map_err(refused)?;
        let receipt = preapplied.get(0).cloned().unwrap_or(Json::Null);
        if let Some((status, errors)) = failure(&receipt) {
            if !opts.force {
                return Err(ClientError::SimulationFailed { status, errors });
            }
        }
        let hash = self.inject(&op)?;
        let forged = self.post(
            "/chains/main/blocks/head/helpers/forge/operations",
            json!({"branch": branch.to_string(), "contents": operation_to_json(&op)["contents"]}),
        )?;
        let local = hex::encode(Operation::forge_unsigned(&op.branch, &op.contents));
        if forged.as_str() != Some(local.as_str()) {
            return Err(ClientError::ForgeMismatch { node: forged.to_string(), local });
        }
        Ok(Submitted { hash, operation: op, chain_id, receipt })
    }

    fn inject(&mut self, op: &Operation) -> Result<OperationHash> {
        let path = "/injection/operation?chain=main";
        let reply = self.post(path, json!(hex::encode(op.to_bytes())))?;
        match reply.as_str().and_then(|s| s.parse::<OperationHash>().ok()) {
            Some(h) if h == op.hash() => Ok(h),
            _ => Err(ClientError::BadReply { path: path.into(), reply }),
        }
    }

    pub fn transfer(&mut self, amount: u64, from: &str, to: &str, parameters: Option<Node>, opts: &SubmitOptions) -> Result<Submitted> {
        let destination = self.wallet.resolve(to)?;
        self.submit(from, vec![Action::Transfer { amount, destination, parameters }], opts)
    }

    /// Originates `script` (already typechecked by the caller) and records
    /// the new address under `alias`.
    pub fn originate(
        &mut self,
        alias: &str,
        balance: u64,
        source: &str,
        script: tzdesk_core::Script,
        opts: &SubmitOptions,
        force_alias: bool,
    ) -> Result<(Address, Submitted)> {
        if self.wallet.contract(alias).is_some() && !force_alias {
            return Err(crate::wallet::WalletError::DuplicateAlias(alias.to_string()).into());
        }
        let s = self.submit(source, vec![Action::Originate { balance, script }], opts)?;
        let addr = *s.originated().first().ok_or_else(|| ClientError::BadReply {
            path: "/chains/main/blocks/head/helpers/preapply/operations".into(),
            reply: s.receipt.clone(),
        })?;
        self.wallet.add_contract(alias, addr, true)?;
        Ok((addr, s))
    }

    /// Claims a faucet allocation and records the faucet key under `alias`.
    pub fn activate(&mut self, alias: &str, faucet: &FaucetFile) -> Result<OperationHash> {
        let amount: u64 = faucet.amount.parse().map_err(|_| ClientError::ActivationRejected(format!("bad amount {}", faucet.amount)))?;
        let secret: [u8; 20] = hex::decode(&faucet.secret)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| ClientError::ActivationRejected("the secret is not 20 hex-encoded bytes".into()))?;
        if faucet.secret_key.public_key().address() != faucet.pkh {
            return Err(ClientError::ActivationRejected("the key does not match the faucet address".into()));
        }
        if let Ok(existing) = self.wallet.resolve(alias) {
            if existing != faucet.pkh {
                return Err(crate::wallet::WalletError::DuplicateAlias(alias.to_string()).into());
            }
        }
        let branch = self.head_hash()?;
        let op = Operation::unsigned(branch, vec![Content::Activation { pkh: faucet.pkh, secret, amount }]);
        let rejected = |e: ClientError| match e {
            ClientError::Rpc { body, .. } => ClientError::ActivationRejected(body[0]["msg"].as_str().unwrap_or("rejected").to_string()),
            e => e,
        };
        let mut sim = operation_to_json(&op);
        sim["signature"] = json!("ANY_SIGNATURE");
        self.post("/chains/main/blocks/head/helpers/scripts/run_operation", sim).map_err(rejected)?;
        let hash = self.inject(&op).map_err(rejected)?;
        self.wallet.import_secret_key(alias, &faucet.secret_key, true)?;
        Ok(hash)
    }

    /// Publishes the key of `name` on its own.
    pub fn reveal(&mut self, name: &str, opts: &SubmitOptions) -> Result<Submitted> {
        let src = self.wallet.secret_key(name)?.public_key().address();
        if self.get(&contract_path(&src, "manager_key"))?.get("key").is_some_and(|k| !k.is_null()) {
            return Err(ClientError::AlreadyRevealed(src));
        }
        self.submit(name, vec![], opts)
    }

    /// Polls until `op` has `confirmations` blocks on top of its own.
    pub fn wait_for(&mut self, op: &str, confirmations: u64) -> Result<Inclusion> {
        let path = format!("/chains/main/operations/{op}");
        let mut seen = false;
        for polls in 0..self.max_polls {
            let st = self.get(&path)?;
            match st["status"].as_str() {
                Some("included") => {
                    seen = true;
                    let c = u64_of(&st["confirmations"]).unwrap_or(0);
                    if c >= confirmations {
                        return Ok(Inclusion {
                            level: u64_of(&st["level"]).unwrap_or(0),
                            block: st["block"].as_str().unwrap_or_default().to_string(),
                            confirmations: c,
                            receipt: st["receipt"].clone(),
                        });
                    }
                }
                Some("pending") if !seen => {}
                Some("unknown") if !seen && polls == 0 => return Err(ClientError::UnknownOperation(op.to_string())),
                Some("unknown") if !seen => {}
                Some(_) if seen => return Err(ClientError::Reorged(op.to_string())),
                _ => return Err(ClientError::BadReply { path, reply: st }),
            }
            self.transport.tick();
        }
        Err(ClientError::Timeout { op: op.to_string(), polls: self.max_polls })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tzdesk_core::crypto::hash;
    use tzdesk_core::SecretKey;

    #[test]
    fn fees_settle_on_the_minimal_fee() {
        let sk = SecretKey::from_label("sender");
        let m = ManagerFields { source: sk.public_key().address(), fee: 0, counter: 1, gas_limit: 10_200, storage_limit: 0 };
        let dest = SecretKey::from_label("dest").public_key().address();
        let mut contents = vec![Content::Transaction { m, amount: 1_000_000, destination: dest, parameters: None }];
        let branch = BlockHash(hash(b"head"));
        assert_eq!(settle_fees(branch, &mut contents), 1269);
        let op = Operation::sign(branch, contents, &sk);
        assert_eq!(op.size(), 149);
        assert_eq!(op.total_fee(), op.minimal_fee());
    }

    #[test]
    fn batched_fees_cover_every_content() {
        let sk = SecretKey::from_label("sender");
        let src = sk.public_key().address();
        let m = |counter, gas_limit| ManagerFields { source: src, fee: 0, counter, gas_limit, storage_limit: 0 };
        let mut contents = vec![
            Content::Reveal { m: m(1, 10_100), public_key: sk.public_key() },
            Content::Transaction { m: m(2, 10_200), amount: 5, destination: src, parameters: None },
        ];
        let branch = BlockHash(hash(b"head"));
        let paid = settle_fees(branch, &mut contents);
        let op = Operation::sign(branch, contents, &sk);
        assert_eq!(paid, op.minimal_fee());
        assert_eq!(op.contents[0].manager().unwrap().fee, 100 + 1010);
    }
}
