//! Gas table. All costs are in gas units.

use crate::typecheck::Op;
use crate::value::Value;

/// Charged for every executed instruction, sequences included.
pub const BASE: u64 = 10;
/// Charged per AST node when a script is typechecked at origination.
pub const TYPECHECK_PER_NODE: u64 = 1;
/// Flat cost of a transaction, external or internal.
pub const TRANSACTION_BASE: u64 = 10_100;
/// Flat cost of reveal, origination and delegation.
pub const MANAGER_BASE: u64 = 10_000;

fn int_bytes(bits: u64) -> u64 {
    bits.div_ceil(8).max(1)
}

/// Size in bytes used for per-byte charges on constants.
pub fn value_size(v: &Value) -> u64 {
    match v {
        Value::Int(i) | Value::Nat(i) => int_bytes(i.bits()),
        Value::Mutez(m) => int_bytes(64 - m.leading_zeros() as u64),
        Value::Timestamp(_) => 8,
        Value::String(s) => s.len() as u64,
        Value::Bool(_) | Value::Unit | Value::None => 1,
        Value::Address(_) | Value::KeyHash(_) | Value::Contract(..) => 21,
        Value::Pair(a, b) => value_size(a) + value_size(b),
        Value::Left(a) | Value::Right(a) | Value::Some(a) => 1 + value_size(a),
        Value::Map(m) => m.iter().map(|(k, v)| value_size(k) + value_size(v)).sum(),
        Value::List(l) => l.iter().map(value_size).sum(),
        Value::Operation(_) => 1,
    }
}

/// ⌈log2(n + 1)⌉, the bit length of `n`.
pub fn map_access_cost(n: usize) -> u64 {
    (usize::BITS - n.leading_zeros()) as u64
}

/// Cost of executing `op` on `stack` (top last).
pub fn gas_cost(op: &Op, stack: &[Value]) -> u64 {
    let nth = |i: usize| stack.len().checked_sub(i + 1).map(|j| &stack[j]);
    let extra = match op {
        Op::Push(v) => value_size(v),
        Op::Get | Op::Mem => match nth(1) {
            Some(Value::Map(m)) => map_access_cost(m.len()),
            _ => 0,
        },
        Op::Update => match nth(2) {
            Some(Value::Map(m)) => map_access_cost(m.len()),
            _ => 0,
        },
        Op::Compare => match (nth(0), nth(1)) {
            (Some(Value::String(a)), Some(Value::String(b))) => a.len().min(b.len()) as u64,
            _ => 0,
        },
        _ => 0,
    };
    BASE + extra
}
