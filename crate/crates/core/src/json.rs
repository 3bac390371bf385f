//! JSON shapes of operations, headers and endorsements as exchanged over
//! RPC. Amounts and counters are decimal strings.

use serde_json::{json, Map, Value as Json};
use tzdesk_michelson::syntax::Node;
use tzdesk_michelson::value::{format_timestamp, parse_timestamp};
use tzdesk_michelson::Address;

use crate::crypto::{BlockHash, ProtocolHash, PublicKey, Signature};
use crate::error::ProtocolError;
use crate::header::{BlockHeader, Endorsement};
use crate::operation::{Content, ManagerFields, Operation, Script, Vote};

fn bad(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Malformed(msg.into())
}

fn field<'a>(j: &'a Json, name: &str) -> Result<&'a Json, ProtocolError> {
    j.get(name).ok_or_else(|| bad(format!("missing field `{name}`")))
}

fn str_field<'a>(j: &'a Json, name: &str) -> Result<&'a str, ProtocolError> {
    field(j, name)?.as_str().ok_or_else(|| bad(format!("field `{name}` must be a string")))
}

/// Accepts a decimal string or a JSON number.
pub fn u64_of(j: &Json) -> Option<u64> {
    match j {
        Json::String(s) => s.parse().ok(),
        Json::Number(n) => n.as_u64(),
        _ => None,
    }
}

fn u64_field(j: &Json, name: &str) -> Result<u64, ProtocolError> {
    u64_of(field(j, name)?).ok_or_else(|| bad(format!("field `{name}` must be a natural number")))
}

fn parsed<T: std::str::FromStr>(j: &Json, name: &str) -> Result<T, ProtocolError>
where
    T::Err: std::fmt::Display,
{
    str_field(j, name)?.parse().map_err(|e: T::Err| bad(format!("field `{name}`: {e}")))
}

fn opt_address(j: &Json, name: &str) -> Result<Option<Address>, ProtocolError> {
    match j.get(name) {
        None | Some(Json::Null) => Ok(None),
        Some(_) => parsed(j, name).map(Some),
    }
}

fn node_field(j: &Json, name: &str) -> Result<Node, ProtocolError> {
    Node::from_json(field(j, name)?).map_err(|e| bad(format!("field `{name}`: {e}")))
}

pub fn timestamp_to_json(t: i64) -> Json {
    match format_timestamp(t) {
        Some(s) => json!(s),
        None => json!(t.to_string()),
    }
}

pub fn timestamp_of(j: &Json) -> Option<i64> {
    match j {
        Json::String(s) => parse_timestamp(s).or_else(|| s.parse().ok()),
        Json::Number(n) => n.as_i64(),
        _ => None,
    }
}

fn manager_json(kind: &str, m: &ManagerFields) -> Map<String, Json> {
    let mut o = Map::new();
    o.insert("kind".into(), json!(kind));
    o.insert("source".into(), json!(m.source.to_string()));
    o.insert("fee".into(), json!(m.fee.to_string()));
    o.insert("counter".into(), json!(m.counter.to_string()));
    o.insert("gas_limit".into(), json!(m.gas_limit.to_string()));
    o.insert("storage_limit".into(), json!(m.storage_limit.to_string()));
    o
}

pub fn content_to_json(c: &Content) -> Json {
    match c {
        Content::Reveal { m, public_key } => {
            let mut o = manager_json(c.kind(), m);
            o.insert("public_key".into(), json!(public_key.to_string()));
            Json::Object(o)
        }
        Content::Transaction { m, amount, destination, parameters } => {
            let mut o = manager_json(c.kind(), m);
            o.insert("amount".into(), json!(amount.to_string()));
            o.insert("destination".into(), json!(destination.to_string()));
            if let Some(p) = parameters {
                o.insert("parameters".into(), p.to_json());
            }
            Json::Object(o)
        }
        Content::Origination { m, balance, delegate, script } => {
            let mut o = manager_json(c.kind(), m);
            o.insert("balance".into(), json!(balance.to_string()));
            if let Some(d) = delegate {
                o.insert("delegate".into(), json!(d.to_string()));
            }
            o.insert("script".into(), json!({"code": script.code.to_json(), "storage": script.storage.to_json()}));
            Json::Object(o)
        }
        Content::Delegation { m, delegate } => {
            let mut o = manager_json(c.kind(), m);
            if let Some(d) = delegate {
                o.insert("delegate".into(), json!(d.to_string()));
            }
            Json::Object(o)
        }
        Content::Activation { pkh, secret, amount } => json!({
            "kind": c.kind(),
            "pkh": pkh.to_string(),
            "secret": hex::encode(secret),
            "amount": amount.to_string(),
        }),
        Content::Proposals { source, period, proposals } => json!({
            "kind": c.kind(),
            "source": source.to_string(),
            "period": period,
            "proposals": proposals.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        }),
        Content::Ballot { source, period, proposal, ballot } => json!({
            "kind": c.kind(),
            "source": source.to_string(),
            "period": period,
            "proposal": proposal.to_string(),
            "ballot": ballot,
        }),
        Content::DoubleBaking { bh1, bh2 } => json!({
            "kind": c.kind(),
            "bh1": header_to_json(bh1),
            "bh2": header_to_json(bh2),
        }),
        Content::DoubleEndorsement { e1, e2 } => json!({
            "kind": c.kind(),
            "op1": endorsement_to_json(e1),
            "op2": endorsement_to_json(e2),
        }),
    }
}

fn manager_of(j: &Json) -> Result<ManagerFields, ProtocolError> {
    Ok(ManagerFields {
        source: parsed(j, "source")?,
        fee: u64_field(j, "fee")?,
        counter: u64_field(j, "counter")?,
        gas_limit: u64_field(j, "gas_limit")?,
        storage_limit: u64_field(j, "storage_limit")?,
    })
}

pub fn content_from_json(j: &Json) -> Result<Content, ProtocolError> {
    let kind = str_field(j, "kind")?;
    Ok(match kind {
        "reveal" => Content::Reveal { m: manager_of(j)?, public_key: parsed::<PublicKey>(j, "public_key")? },
        "transaction" => Content::Transaction {
            m: manager_of(j)?,
            amount: u64_field(j, "amount")?,
            destination: parsed(j, "destination")?,
            parameters: match j.get("parameters") {
                None | Some(Json::Null) => None,
                Some(_) => Some(node_field(j, "parameters")?),
            },
        },
        "origination" => {
            let s = field(j, "script")?;
            Content::Origination {
                m: manager_of(j)?,
                balance: u64_field(j, "balance")?,
                delegate: opt_address(j, "delegate")?,
                script: Script { code: node_field(s, "code")?, storage: node_field(s, "storage")? },
            }
        }
        "delegation" => Content::Delegation { m: manager_of(j)?, delegate: opt_address(j, "delegate")? },
        "activate_account" => {
            let secret = hex::decode(str_field(j, "secret")?).map_err(|_| bad("secret must be hex"))?;
            Content::Activation {
                pkh: parsed(j, "pkh")?,
                secret: secret.try_into().map_err(|_| bad("secret must be 20 bytes"))?,
                amount: u64_field(j, "amount")?,
            }
        }
        "proposals" => Content::Proposals {
            source: parsed(j, "source")?,
            period: u64_field(j, "period")? as u32,
            proposals: field(j, "proposals")?
                .as_array()
                .ok_or_else(|| bad("proposals must be an array"))?
                .iter()
                .map(|p| p.as_str().and_then(|s| s.parse::<ProtocolHash>().ok()).ok_or_else(|| bad("bad protocol hash")))
                .collect::<Result<_, _>>()?,
        },
        "ballot" => Content::Ballot {
            source: parsed(j, "source")?,
            period: u64_field(j, "period")? as u32,
            proposal: parsed(j, "proposal")?,
            ballot: serde_json::from_value::<Vote>(field(j, "ballot")?.clone()).map_err(|e| bad(e.to_string()))?,
        },
        "double_baking_evidence" => Content::DoubleBaking {
            bh1: Box::new(header_from_json(field(j, "bh1")?)?),
            bh2: Box::new(header_from_json(field(j, "bh2")?)?),
        },
        "double_endorsement_evidence" => Content::DoubleEndorsement {
            e1: Box::new(endorsement_from_json(field(j, "op1")?)?),
            e2: Box::new(endorsement_from_json(field(j, "op2")?)?),
        },
        k => return Err(bad(format!("unknown operation kind `{k}`"))),
    })
}

pub fn operation_to_json(op: &Operation) -> Json {
    json!({
        "branch": op.branch.to_string(),
        "contents": op.contents.iter().map(content_to_json).collect::<Vec<_>>(),
        "signature": op.signature.to_string(),
    })
}

/// Parses `{branch, contents, signature}`; a missing signature reads as
/// the simulation placeholder.
pub fn operation_from_json(j: &Json) -> Result<Operation, ProtocolError> {
    let contents = field(j, "contents")?
        .as_array()
        .ok_or_else(|| bad("contents must be an array"))?
        .iter()
        .map(content_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    if contents.is_empty() {
        return Err(ProtocolError::EmptyOperation);
    }
    let signature = match j.get("signature") {
        None | Some(Json::Null) => Signature::ANY,
        Some(_) => parsed(j, "signature")?,
    };
    Ok(Operation { branch: parsed::<BlockHash>(j, "branch")?, contents, signature })
}

pub fn header_to_json(h: &BlockHeader) -> Json {
    json!({
        "level": h.level,
        "predecessor": h.predecessor.to_string(),
        "timestamp": timestamp_to_json(h.timestamp),
        "priority": h.priority,
        "baker": h.baker.to_string(),
        "operations_hash": hex::encode(h.operations_hash),
        "signature": h.signature.to_string(),
    })
}

pub fn header_from_json(j: &Json) -> Result<BlockHeader, ProtocolError> {
    let ops = hex::decode(str_field(j, "operations_hash")?).map_err(|_| bad("operations_hash must be hex"))?;
    Ok(BlockHeader {
        level: u64_field(j, "level")?,
        predecessor: parsed(j, "predecessor")?,
        timestamp: timestamp_of(field(j, "timestamp")?).ok_or_else(|| bad("bad timestamp"))?,
        priority: u64_field(j, "priority")? as u16,
        baker: parsed(j, "baker")?,
        operations_hash: ops.try_into().map_err(|_| bad("operations_hash must be 32 bytes"))?,
        signature: parsed(j, "signature")?,
    })
}

pub fn endorsement_to_json(e: &Endorsement) -> Json {
    json!({
        "level": e.level,
        "slot": e.slot,
        "block": e.block.to_string(),
        "delegate": e.delegate.to_string(),
        "signature": e.signature.to_string(),
    })
}

pub fn endorsement_from_json(j: &Json) -> Result<Endorsement, ProtocolError> {
    Ok(Endorsement {
        level: u64_field(j, "level")?,
        slot: u64_field(j, "slot")? as u16,
        block: parsed(j, "block")?,
        delegate: parsed(j, "delegate")?,
        signature: parsed(j, "signature")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{hash, SecretKey};

    #[test]
    fn transaction_json_field_names() {
        let sk = SecretKey::from_label("a");
        let m = ManagerFields { source: sk.public_key().address(), fee: 1269, counter: 1, gas_limit: 10200, storage_limit: 0 };
        let c = Content::Transaction { m, amount: 1, destination: sk.public_key().address(), parameters: None };
        let j = content_to_json(&c);
        for f in ["kind", "source", "fee", "counter", "gas_limit", "storage_limit", "amount", "destination"] {
            assert!(j.get(f).is_some(), "{f}");
        }
        assert_eq!(j["fee"], json!("1269"));
        assert_eq!(content_from_json(&j).unwrap(), c);
    }

    #[test]
    fn operation_round_trip_and_any_signature() {
        let sk = SecretKey::from_label("a");
        let e = Endorsement::new(&sk, 3, 1, BlockHash(hash(b"z")));
        let e2 = Endorsement::new(&sk, 3, 1, BlockHash(hash(b"y")));
        let op = Operation::unsigned(BlockHash(hash(b"b")), vec![Content::double_endorsement(e, e2)]);
        let j = operation_to_json(&op);
        assert_eq!(operation_from_json(&j).unwrap(), op);
        let mut j2 = j.clone();
        j2["signature"] = json!("ANY_SIGNATURE");
        assert_eq!(operation_from_json(&j2).unwrap().signature, Signature::ANY);
        j2["contents"][0]["kind"] = json!("teleport");
        assert!(operation_from_json(&j2).is_err());
    }
}
