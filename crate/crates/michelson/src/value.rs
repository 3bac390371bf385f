use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use num_bigint::BigInt;

use crate::address::Address;
use crate::syntax::{Data, Node};
use crate::types::Ty;

/// A transfer emitted by `TRANSFER_TOKENS`, executed after the emitting
/// script returns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InternalOp {
    pub destination: Address,
    pub amount: u64,
    pub parameter: Value,
    pub param_ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Nat(BigInt),
    Mutez(u64),
    String(String),
    Timestamp(i64),
    Bool(bool),
    Unit,
    Address(Address),
    KeyHash(Address),
    Pair(Box<Value>, Box<Value>),
    Left(Box<Value>),
    Right(Box<Value>),
    Some(Box<Value>),
    None,
    Map(BTreeMap<Value, Value>),
    List(Vec<Value>),
    Operation(Box<InternalOp>),
    Contract(Address, Ty),
}

pub fn format_timestamp(t: i64) -> Option<String> {
    DateTime::<Utc>::from_timestamp(t, 0).map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
}

/// RFC 3339, also accepting a space between date and time.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let normalized = match s.find(' ') {
        Some(i) if i == 10 => format!("{}T{}", &s[..10], &s[11..]),
        _ => s.to_string(),
    };
    DateTime::parse_from_rfc3339(&normalized).ok().map(|d| d.timestamp())
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn some(a: Value) -> Value {
        Value::Some(Box::new(a))
    }

    pub fn left(a: Value) -> Value {
        Value::Left(Box::new(a))
    }

    pub fn right(a: Value) -> Value {
        Value::Right(Box::new(a))
    }

    pub fn int(i: impl Into<BigInt>) -> Value {
        Value::Int(i.into())
    }

    pub fn nat(i: impl Into<BigInt>) -> Value {
        Value::Nat(i.into())
    }

    pub fn string(s: impl Into<String>) -> Value {
        Value::String(s.into())
    }

    /// Converts back to a literal. Timestamps render as RFC 3339 when
    /// `readable`, otherwise as integer seconds (the compact form used for
    /// storage accounting). Operations have no literal form and render as
    /// an opaque string.
    pub fn to_data(&self, readable: bool) -> Data {
        match self {
            Value::Int(i) | Value::Nat(i) => Data::Int(i.clone()),
            Value::Mutez(m) => Data::Int((*m).into()),
            Value::String(s) => Data::Str(s.clone()),
            Value::Timestamp(t) => match (readable, format_timestamp(*t)) {
                (true, Some(s)) => Data::Str(s),
                _ => Data::Int((*t).into()),
            },
            Value::Bool(true) => Data::True,
            Value::Bool(false) => Data::False,
            Value::Unit => Data::Unit,
            Value::Address(a) | Value::KeyHash(a) | Value::Contract(a, _) => Data::Str(a.to_string()),
            Value::Pair(a, b) => Data::pair(a.to_data(readable), b.to_data(readable)),
            Value::Left(a) => Data::Left(Box::new(a.to_data(readable))),
            Value::Right(a) => Data::Right(Box::new(a.to_data(readable))),
            Value::Some(a) => Data::Some(Box::new(a.to_data(readable))),
            Value::None => Data::None,
            Value::Map(m) => Data::Seq(
                m.iter()
                    .map(|(k, v)| Data::Elt(Box::new(k.to_data(readable)), Box::new(v.to_data(readable))))
                    .collect(),
            ),
            Value::List(l) => Data::Seq(l.iter().map(|v| v.to_data(readable)).collect()),
            Value::Operation(op) => {
                Data::Str(format!("<transfer {} mutez to {}>", op.amount, op.destination))
            }
        }
    }

    pub fn to_node(&self) -> Node {
        self.to_data(true).to_node()
    }

    pub fn to_json(&self) -> serde_json::Value {
        self.to_node().to_json()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_node().to_inline())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc3339_timestamp_parses() {
        let t = parse_timestamp("2019-05-07 23:22:25+00:00").unwrap();
        assert_eq!(format_timestamp(t).unwrap(), "2019-05-07T23:22:25Z");
        assert_eq!(parse_timestamp("2019-05-07T23:22:25Z"), Some(t));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn display_map() {
        let mut m = BTreeMap::new();
        m.insert(Value::string("b"), Value::int(2));
        m.insert(Value::string("a"), Value::int(1));
        assert_eq!(Value::Map(m).to_string(), "{ Elt \"a\" 1 ; Elt \"b\" 2 }");
    }
}
