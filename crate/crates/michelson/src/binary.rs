//! Compact binary form of expression trees, used for scripts and storage
//! in forged operations and for storage-size accounting.
//!
//! | tag | payload                                    |
//! |-----|--------------------------------------------|
//! | 0   | signed integer, zarith                     |
//! | 1   | u32 BE length, UTF-8 bytes                 |
//! | 2   | u32 BE byte length, concatenated items     |
//! | 3   | primitive code (u8), argument count (u8), arguments |
//! | 4   | name length (u8), name, argument count (u8), arguments |
//!
//! Tag 4 carries primitives outside the code table, such as macros.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;
use thiserror::Error;

use crate::syntax::{Node, NodeKind, CORE_OPCODES};
use crate::typecheck::TypedProgram;
use crate::value::Value;

const KEYWORDS: &[&str] = &[
    "parameter", "storage", "code", "int", "nat", "mutez", "string", "timestamp", "bool", "unit", "address",
    "key_hash", "operation", "pair", "or", "option", "map", "list", "contract", "Unit", "True", "False", "Pair",
    "Left", "Right", "Some", "None", "Elt",
];

fn prim_code(name: &str) -> Option<u8> {
    KEYWORDS.iter().chain(CORE_OPCODES).position(|k| *k == name).map(|i| i as u8)
}

fn prim_name(code: u8) -> Option<&'static str> {
    KEYWORDS.iter().chain(CORE_OPCODES).nth(code as usize).copied()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinaryError {
    #[error("primitive `{0}` has no binary code")]
    UnknownPrim(String),
    #[error("unknown primitive code {0}")]
    UnknownCode(u8),
    #[error("unexpected end of input")]
    Truncated,
    #[error("bad tag {0}")]
    BadTag(u8),
    #[error("invalid UTF-8 string")]
    BadString,
    #[error("trailing bytes")]
    Trailing,
}

pub fn write_zarith(i: &BigInt, out: &mut Vec<u8>) {
    let neg = i.sign() == Sign::Minus;
    let mut mag = i.magnitude().clone();
    let low = (&mag & BigUint::from(0x3fu8)).to_u64_digits().first().copied().unwrap_or(0) as u8;
    mag >>= 6;
    let mut b = low | if neg { 0x40 } else { 0 };
    if !mag.is_zero() {
        b |= 0x80;
    }
    out.push(b);
    while !mag.is_zero() {
        let low = (&mag & BigUint::from(0x7fu8)).to_u64_digits().first().copied().unwrap_or(0) as u8;
        mag >>= 7;
        out.push(low | if mag.is_zero() { 0 } else { 0x80 });
    }
}

pub fn read_zarith(input: &[u8], at: &mut usize) -> Result<BigInt, BinaryError> {
    let first = *input.get(*at).ok_or(BinaryError::Truncated)?;
    *at += 1;
    let neg = first & 0x40 != 0;
    let mut mag = BigUint::from(first & 0x3f);
    let mut shift = 6;
    let mut more = first & 0x80 != 0;
    while more {
        let b = *input.get(*at).ok_or(BinaryError::Truncated)?;
        *at += 1;
        mag |= BigUint::from(b & 0x7f) << shift;
        shift += 7;
        more = b & 0x80 != 0;
    }
    Ok(BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, mag))
}

pub fn encode_node(n: &Node, out: &mut Vec<u8>) -> Result<(), BinaryError> {
    match &n.kind {
        NodeKind::Int(i) => {
            out.push(0);
            write_zarith(i, out);
        }
        NodeKind::Str(s) => {
            out.push(1);
            out.extend((s.len() as u32).to_be_bytes());
            out.extend(s.as_bytes());
        }
        NodeKind::Seq(items) => {
            out.push(2);
            let mut body = Vec::new();
            for i in items {
                encode_node(i, &mut body)?;
            }
            out.extend((body.len() as u32).to_be_bytes());
            out.extend(body);
        }
        NodeKind::Prim(name, args) => {
            match prim_code(name) {
                Some(code) => {
                    out.push(3);
                    out.push(code);
                }
                None => {
                    let len = u8::try_from(name.len()).map_err(|_| BinaryError::UnknownPrim(name.clone()))?;
                    out.push(4);
                    out.push(len);
                    out.extend(name.as_bytes());
                }
            }
            out.push(args.len() as u8);
            for a in args {
                encode_node(a, out)?;
            }
        }
    }
    Ok(())
}

fn read_u32(input: &[u8], at: &mut usize) -> Result<usize, BinaryError> {
    let b = input.get(*at..*at + 4).ok_or(BinaryError::Truncated)?;
    *at += 4;
    Ok(u32::from_be_bytes(b.try_into().expect("4 bytes")) as usize)
}

fn decode_at(input: &[u8], at: &mut usize) -> Result<Node, BinaryError> {
    let tag = *input.get(*at).ok_or(BinaryError::Truncated)?;
    *at += 1;
    match tag {
        0 => Ok(Node::int(read_zarith(input, at)?)),
        1 => {
            let len = read_u32(input, at)?;
            let b = input.get(*at..*at + len).ok_or(BinaryError::Truncated)?;
            *at += len;
            Ok(Node::string(std::str::from_utf8(b).map_err(|_| BinaryError::BadString)?))
        }
        2 => {
            let len = read_u32(input, at)?;
            let end = *at + len;
            if end > input.len() {
                return Err(BinaryError::Truncated);
            }
            let mut items = Vec::new();
            while *at < end {
                items.push(decode_at(&input[..end], at)?);
            }
            Ok(Node::seq(items))
        }
        3 => {
            let code = *input.get(*at).ok_or(BinaryError::Truncated)?;
            let argc = *input.get(*at + 1).ok_or(BinaryError::Truncated)?;
            *at += 2;
            let name = prim_name(code).ok_or(BinaryError::UnknownCode(code))?;
            let args = (0..argc).map(|_| decode_at(input, at)).collect::<Result<_, _>>()?;
            Ok(Node::prim(name, args))
        }
        4 => {
            let len = *input.get(*at).ok_or(BinaryError::Truncated)? as usize;
            let name = input.get(*at + 1..*at + 1 + len).ok_or(BinaryError::Truncated)?;
            let name = std::str::from_utf8(name).map_err(|_| BinaryError::BadString)?.to_string();
            *at += 1 + len;
            let argc = *input.get(*at).ok_or(BinaryError::Truncated)?;
            *at += 1;
            let args = (0..argc).map(|_| decode_at(input, at)).collect::<Result<_, _>>()?;
            Ok(Node::prim(name, args))
        }
        t => Err(BinaryError::BadTag(t)),
    }
}

pub fn decode_node(input: &[u8]) -> Result<Node, BinaryError> {
    let mut at = 0;
    let n = decode_at(input, &mut at)?;
    if at != input.len() {
        return Err(BinaryError::Trailing);
    }
    Ok(n)
}

/// Decodes one node starting at `*at`, advancing it.
pub fn decode_node_at(input: &[u8], at: &mut usize) -> Result<Node, BinaryError> {
    decode_at(input, at)
}

pub fn encode(n: &Node) -> Result<Vec<u8>, BinaryError> {
    let mut out = Vec::new();
    encode_node(n, &mut out)?;
    Ok(out)
}

/// Canonical storage encoding: timestamps as integers.
pub fn encode_value(v: &Value) -> Vec<u8> {
    encode(&v.to_data(false).to_node()).expect("values only use known primitives")
}

/// Encoded script: the three sections as one sequence.
pub fn encode_script(p: &TypedProgram) -> Vec<u8> {
    encode(&Node::seq(p.source.to_nodes())).expect("core programs only use known primitives")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    #[test]
    fn zarith_round_trip() {
        for i in [-1_000_000i64, -64, -63, -1, 0, 1, 63, 64, 127, 128, 8191, 8192, i64::MAX] {
            let mut out = Vec::new();
            write_zarith(&BigInt::from(i), &mut out);
            let mut at = 0;
            assert_eq!(read_zarith(&out, &mut at).unwrap(), BigInt::from(i));
            assert_eq!(at, out.len());
        }
        let mut out = Vec::new();
        write_zarith(&BigInt::from(63), &mut out);
        assert_eq!(out, vec![63]);
    }

    #[test]
    fn node_round_trip() {
        let n = parse_expr("Pair { Elt \"a\" 1 ; Elt \"b\" -2 } (Left Unit)").unwrap();
        assert_eq!(decode_node(&encode(&n).unwrap()).unwrap(), n);
    }

    #[test]
    fn macros_use_named_primitives() {
        let n = parse_expr("{ DUUUP ; IFCMPGT { FAIL } {} ; DROP }").unwrap();
        let b = encode(&n).unwrap();
        assert_eq!(decode_node(&b).unwrap(), n);
        assert!(encode(&Node::prim("X".repeat(300), vec![])).is_err());
    }
}
