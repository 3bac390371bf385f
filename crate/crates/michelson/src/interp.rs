use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::address::Address;
use crate::gas::gas_cost;
use crate::typecheck::{Op, Typed, TypedProgram};
use crate::types::Ty;
use crate::value::{InternalOp, Value};

/// Resolves the parameter type of a destination for `CONTRACT`.
pub trait ContractTypes {
    fn parameter_type(&self, addr: &Address) -> Option<Ty>;
}

/// Only implicit accounts exist (typed `unit`).
pub struct ImplicitOnly;

impl ContractTypes for ImplicitOnly {
    fn parameter_type(&self, addr: &Address) -> Option<Ty> {
        addr.is_implicit().then_some(Ty::Unit)
    }
}

pub struct ExecEnv<'a> {
    pub amount: u64,
    pub sender: Address,
    pub source: Address,
    pub self_address: Address,
    /// Contract balance, already including `amount`.
    pub balance: u64,
    pub now: i64,
    pub gas_limit: u64,
    pub contracts: &'a dyn ContractTypes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecResult {
    pub operations: Vec<InternalOp>,
    pub storage: Value,
    pub gas_consumed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecErrorKind {
    #[error("script failed with {0}")]
    ScriptFailed(Value),
    #[error("gas exhausted")]
    GasExhausted,
    /// A stack shape the typechecker should have ruled out.
    #[error("ill-shaped stack at {0}")]
    StackShape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} (gas consumed: {gas_consumed})")]
pub struct ExecError {
    pub kind: ExecErrorKind,
    pub gas_consumed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub instr: &'static str,
    /// Stack before the instruction, top first.
    pub stack: Vec<Value>,
    pub gas_after: u64,
}

struct Machine<'a, 'e> {
    env: &'a ExecEnv<'e>,
    gas: u64,
    trace: Option<Vec<TraceStep>>,
}

type Step = Result<(), ExecErrorKind>;

fn shape(op: &Op) -> ExecErrorKind {
    ExecErrorKind::StackShape(op.name().to_string())
}

fn failed(msg: &str) -> ExecErrorKind {
    ExecErrorKind::ScriptFailed(Value::string(msg))
}

fn mutez_of(i: BigInt) -> Result<Value, ExecErrorKind> {
    i.to_u64().map(Value::Mutez).ok_or_else(|| failed("mutez overflow"))
}

fn timestamp_of(i: BigInt) -> Result<Value, ExecErrorKind> {
    i.to_i64().map(Value::Timestamp).ok_or_else(|| failed("timestamp overflow"))
}

fn arith(op: &Op, a: Value, b: Value) -> Result<Value, ExecErrorKind> {
    use Value::*;
    Ok(match (op, a, b) {
        (Op::Add, Nat(x), Nat(y)) => Nat(x + y),
        (Op::Mul, Nat(x), Nat(y)) => Nat(x * y),
        (Op::Add, Int(x) | Nat(x), Int(y) | Nat(y)) => Int(x + y),
        (Op::Sub, Int(x) | Nat(x), Int(y) | Nat(y)) => Int(x - y),
        (Op::Mul, Int(x) | Nat(x), Int(y) | Nat(y)) => Int(x * y),
        (Op::Add, Mutez(x), Mutez(y)) => mutez_of(BigInt::from(x) + y)?,
        (Op::Sub, Mutez(x), Mutez(y)) => mutez_of(BigInt::from(x) - y)?,
        (Op::Mul, Mutez(x), Nat(y)) | (Op::Mul, Nat(y), Mutez(x)) => mutez_of(BigInt::from(x) * y)?,
        (Op::Add, Timestamp(t), Int(d)) | (Op::Add, Int(d), Timestamp(t)) => timestamp_of(BigInt::from(t) + d)?,
        (Op::Sub, Timestamp(t), Int(d)) => timestamp_of(BigInt::from(t) - d)?,
        (Op::Sub, Timestamp(a), Timestamp(b)) => Int(BigInt::from(a) - b),
        _ => return Err(shape(op)),
    })
}

fn same_variant(a: &Value, b: &Value) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

impl Machine<'_, '_> {
    fn pop(&self, s: &mut Vec<Value>, op: &Op) -> Result<Value, ExecErrorKind> {
        s.pop().ok_or_else(|| shape(op))
    }

    fn block(&mut self, b: &[Typed], s: &mut Vec<Value>) -> Step {
        for t in b {
            self.exec(&t.op, s)?;
        }
        Ok(())
    }

    fn exec(&mut self, op: &Op, s: &mut Vec<Value>) -> Step {
        let cost = gas_cost(op, s);
        self.gas = self.gas.saturating_add(cost);
        if self.gas > self.env.gas_limit {
            return Err(ExecErrorKind::GasExhausted);
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceStep { instr: op.name(), stack: s.iter().rev().cloned().collect(), gas_after: self.gas });
        }
        let env = self.env;
        match op {
            Op::Push(v) => s.push(v.clone()),
            Op::Drop => {
                self.pop(s, op)?;
            }
            Op::Dup => {
                let v = s.last().ok_or_else(|| shape(op))?.clone();
                s.push(v);
            }
            Op::Swap => {
                let n = s.len();
                if n < 2 {
                    return Err(shape(op));
                }
                s.swap(n - 1, n - 2);
            }
            Op::Dip(b) => {
                let v = self.pop(s, op)?;
                self.block(b, s)?;
                s.push(v);
            }
            Op::Pair => {
                let a = self.pop(s, op)?;
                let b = self.pop(s, op)?;
                s.push(Value::pair(a, b));
            }
            Op::Car | Op::Cdr => match self.pop(s, op)? {
                Value::Pair(a, b) => s.push(if matches!(op, Op::Car) { *a } else { *b }),
                _ => return Err(shape(op)),
            },
            Op::Unit => s.push(Value::Unit),
            Op::Some => {
                let v = self.pop(s, op)?;
                s.push(Value::some(v));
            }
            Op::None => s.push(Value::None),
            Op::Left => {
                let v = self.pop(s, op)?;
                s.push(Value::left(v));
            }
            Op::Right => {
                let v = self.pop(s, op)?;
                s.push(Value::right(v));
            }
            Op::Cons => {
                let v = self.pop(s, op)?;
                match s.last_mut() {
                    Some(Value::List(l)) => l.insert(0, v),
                    _ => return Err(shape(op)),
                }
            }
            Op::Nil => s.push(Value::List(Vec::new())),
            Op::EmptyMap => s.push(Value::Map(Default::default())),
            Op::Get | Op::Mem => {
                let k = self.pop(s, op)?;
                let m = match self.pop(s, op)? {
                    Value::Map(m) => m,
                    _ => return Err(shape(op)),
                };
                if matches!(op, Op::Get) {
                    s.push(m.get(&k).cloned().map_or(Value::None, Value::some));
                } else {
                    s.push(Value::Bool(m.contains_key(&k)));
                }
            }
            Op::Update => {
                let k = self.pop(s, op)?;
                let v = self.pop(s, op)?;
                match (s.last_mut(), v) {
                    (Some(Value::Map(m)), Value::Some(v)) => {
                        m.insert(k, *v);
                    }
                    (Some(Value::Map(m)), Value::None) => {
                        m.remove(&k);
                    }
                    _ => return Err(shape(op)),
                }
            }
            Op::Add | Op::Sub | Op::Mul => {
                let a = self.pop(s, op)?;
                let b = self.pop(s, op)?;
                s.push(arith(op, a, b)?);
            }
            Op::Compare => {
                let a = self.pop(s, op)?;
                let b = self.pop(s, op)?;
                if !same_variant(&a, &b) {
                    return Err(shape(op));
                }
                let c = match a.cmp(&b) {
                    Ordering::Less => -1,
                    Ordering::Equal => 0,
                    Ordering::Greater => 1,
                };
                s.push(Value::int(c));
            }
            Op::Eq | Op::Neq | Op::Lt | Op::Gt | Op::Le | Op::Ge => {
                let i = match self.pop(s, op)? {
                    Value::Int(i) => i,
                    _ => return Err(shape(op)),
                };
                let z = BigInt::zero();
                let b = match op {
                    Op::Eq => i == z,
                    Op::Neq => i != z,
                    Op::Lt => i < z,
                    Op::Gt => i > z,
                    Op::Le => i <= z,
                    _ => i >= z,
                };
                s.push(Value::Bool(b));
            }
            Op::If(a, b) => match self.pop(s, op)? {
                Value::Bool(true) => self.block(a, s)?,
                Value::Bool(false) => self.block(b, s)?,
                _ => return Err(shape(op)),
            },
            Op::IfNone(a, b) => match self.pop(s, op)? {
                Value::None => self.block(a, s)?,
                Value::Some(v) => {
                    s.push(*v);
                    self.block(b, s)?
                }
                _ => return Err(shape(op)),
            },
            Op::IfLeft(a, b) => match self.pop(s, op)? {
                Value::Left(v) => {
                    s.push(*v);
                    self.block(a, s)?
                }
                Value::Right(v) => {
                    s.push(*v);
                    self.block(b, s)?
                }
                _ => return Err(shape(op)),
            },
            Op::And | Op::Or => match (self.pop(s, op)?, self.pop(s, op)?) {
                (Value::Bool(a), Value::Bool(b)) => s.push(Value::Bool(if matches!(op, Op::And) { a && b } else { a || b })),
                _ => return Err(shape(op)),
            },
            Op::Not => match self.pop(s, op)? {
                Value::Bool(a) => s.push(Value::Bool(!a)),
                _ => return Err(shape(op)),
            },
            Op::Amount => s.push(Value::Mutez(env.amount)),
            Op::Balance => s.push(Value::Mutez(env.balance)),
            Op::Sender => s.push(Value::Address(env.sender)),
            Op::Source => s.push(Value::Address(env.source)),
            Op::SelfContract(t) => s.push(Value::Contract(env.self_address, t.clone())),
            Op::Now => s.push(Value::Timestamp(env.now)),
            Op::Address => match self.pop(s, op)? {
                Value::Contract(a, _) => s.push(Value::Address(a)),
                _ => return Err(shape(op)),
            },
            Op::Contract(t) => match self.pop(s, op)? {
                Value::Address(a) => {
                    let found = env.contracts.parameter_type(&a);
                    s.push(if found.as_ref() == Some(t) { Value::some(Value::Contract(a, t.clone())) } else { Value::None });
                }
                _ => return Err(shape(op)),
            },
            Op::TransferTokens => {
                let arg = self.pop(s, op)?;
                let amount = self.pop(s, op)?;
                let dest = self.pop(s, op)?;
                match (amount, dest) {
                    (Value::Mutez(amount), Value::Contract(destination, param_ty)) => {
                        s.push(Value::Operation(Box::new(InternalOp { destination, amount, parameter: arg, param_ty })))
                    }
                    _ => return Err(shape(op)),
                }
            }
            Op::ImplicitAccount => match self.pop(s, op)? {
                Value::KeyHash(a) => s.push(Value::Contract(a, Ty::Unit)),
                _ => return Err(shape(op)),
            },
            Op::Failwith => {
                let v = self.pop(s, op)?;
                return Err(ExecErrorKind::ScriptFailed(v));
            }
            Op::Loop(b) => loop {
                match self.pop(s, op)? {
                    Value::Bool(true) => self.block(b, s)?,
                    Value::Bool(false) => break,
                    _ => return Err(shape(op)),
                }
            },
            Op::Seq(b) => self.block(b, s)?,
        }
        Ok(())
    }
}

fn run(
    p: &TypedProgram,
    param: Value,
    storage: Value,
    env: &ExecEnv<'_>,
    trace: bool,
) -> (Option<Vec<TraceStep>>, Result<ExecResult, ExecError>) {
    let mut m = Machine { env, gas: 0, trace: trace.then(Vec::new) };
    let mut stack = vec![Value::pair(param, storage)];
    let outcome = m.block(&p.code, &mut stack).and_then(|_| finish(stack));
    let gas_consumed = m.gas.min(env.gas_limit);
    let result = match outcome {
        Ok((operations, storage)) => Ok(ExecResult { operations, storage, gas_consumed }),
        Err(kind) => Err(ExecError { kind, gas_consumed }),
    };
    (m.trace, result)
}

fn finish(mut stack: Vec<Value>) -> Result<(Vec<InternalOp>, Value), ExecErrorKind> {
    let bad = || ExecErrorKind::StackShape("final stack".into());
    if stack.len() != 1 {
        return Err(bad());
    }
    match stack.pop().expect("one element") {
        Value::Pair(ops, storage) => match *ops {
            Value::List(l) => {
                let ops = l
                    .into_iter()
                    .map(|v| match v {
                        Value::Operation(op) => Ok(*op),
                        _ => Err(bad()),
                    })
                    .collect::<Result<_, _>>()?;
                Ok((ops, *storage))
            }
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

/// Runs a typechecked script. Emitted operations are returned, never executed.
pub fn run_script(p: &TypedProgram, param: Value, storage: Value, env: &ExecEnv<'_>) -> Result<ExecResult, ExecError> {
    run(p, param, storage, env, false).1
}

/// Like [`run_script`], also recording every executed instruction. On
/// failure the trace stops at the failing instruction.
pub fn trace_run(
    p: &TypedProgram,
    param: Value,
    storage: Value,
    env: &ExecEnv<'_>,
) -> (Vec<TraceStep>, Result<ExecResult, ExecError>) {
    let (trace, result) = run(p, param, storage, env, true);
    (trace.unwrap_or_default(), result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{expand_macros, parse_program};
    use crate::typecheck::typecheck_program;

    fn program(src: &str) -> TypedProgram {
        typecheck_program(&expand_macros(&parse_program(src).unwrap()).unwrap()).unwrap()
    }

    fn env(gas_limit: u64) -> ExecEnv<'static> {
        let a = Address::implicit([1; 20]);
        ExecEnv {
            amount: 0,
            sender: a,
            source: a,
            self_address: Address::originated([2; 20]),
            balance: 0,
            now: 0,
            gas_limit,
            contracts: &ImplicitOnly,
        }
    }

    #[test]
    fn identity_contract_keeps_storage() {
        let p = program("parameter unit; storage int; code { CDR; NIL operation; PAIR }");
        let r = run_script(&p, Value::Unit, Value::int(42), &env(1000)).unwrap();
        assert_eq!(r.storage, Value::int(42));
        assert!(r.operations.is_empty());
        assert_eq!(r.gas_consumed, 30);
    }

    #[test]
    fn identity_trace_has_three_steps() {
        let p = program("parameter unit; storage unit; code { CDR; NIL operation; PAIR }");
        let (trace, r) = trace_run(&p, Value::Unit, Value::Unit, &env(1000));
        r.unwrap();
        assert_eq!(trace.len(), 3);
        assert_eq!(trace[0].stack, vec![Value::pair(Value::Unit, Value::Unit)]);
        assert_eq!(trace.iter().map(|t| t.gas_after).collect::<Vec<_>>(), vec![10, 20, 30]);
    }

    #[test]
    fn gas_exhaustion_truncates_trace() {
        let p = program("parameter unit; storage unit; code { CDR; NIL operation; PAIR }");
        let (trace, r) = trace_run(&p, Value::Unit, Value::Unit, &env(15));
        let e = r.unwrap_err();
        assert_eq!(e.kind, ExecErrorKind::GasExhausted);
        assert_eq!(e.gas_consumed, 15);
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn mutez_overflow_fails_script() {
        let p = program(
            "parameter unit; storage mutez; code { CDR; PUSH mutez 18446744073709551615; ADD; NIL operation; PAIR }",
        );
        let e = run_script(&p, Value::Unit, Value::Mutez(1), &env(1000)).unwrap_err();
        assert!(matches!(e.kind, ExecErrorKind::ScriptFailed(_)));
    }

    #[test]
    fn transfer_is_deferred() {
        let p = program(
            "parameter unit; storage unit; code { CDR; SENDER; CONTRACT unit; IF_NONE { FAIL } {}; PUSH mutez 7; UNIT; TRANSFER_TOKENS; NIL operation; SWAP; CONS; PAIR }",
        );
        let e = env(10_000);
        let r = run_script(&p, Value::Unit, Value::Unit, &e).unwrap();
        assert_eq!(r.operations.len(), 1);
        assert_eq!(r.operations[0].amount, 7);
        assert_eq!(r.operations[0].destination, e.sender);
    }

    #[test]
    fn loop_terminates_via_gas() {
        let p = program("parameter unit; storage unit; code { PUSH bool True; LOOP { PUSH bool True }; CDR; NIL operation; PAIR }");
        let e = run_script(&p, Value::Unit, Value::Unit, &env(5_000)).unwrap_err();
        assert_eq!(e.kind, ExecErrorKind::GasExhausted);
    }
}
