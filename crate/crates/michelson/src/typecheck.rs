//! Static stack-effect typing. Stacks are stored top-last; error messages
//! print them top-first.

use std::collections::BTreeMap;

use num_bigint::{BigInt, Sign};
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::address::Address;
use crate::syntax::{block_node_count, Data, Instr, RawProgram, SyntaxError};
use crate::types::Ty;
use crate::value::{parse_timestamp, Value};

/// Typed instruction: core opcodes with checked immediates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Push(Value),
    Drop,
    Dup,
    Swap,
    Dip(Vec<Typed>),
    Pair,
    Car,
    Cdr,
    Unit,
    Some,
    None,
    Left,
    Right,
    Cons,
    Nil,
    EmptyMap,
    Get,
    Update,
    Mem,
    Add,
    Sub,
    Mul,
    Compare,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    If(Vec<Typed>, Vec<Typed>),
    IfNone(Vec<Typed>, Vec<Typed>),
    IfLeft(Vec<Typed>, Vec<Typed>),
    And,
    Or,
    Not,
    Amount,
    Balance,
    Sender,
    Source,
    SelfContract(Ty),
    Now,
    Address,
    Contract(Ty),
    TransferTokens,
    ImplicitAccount,
    Failwith,
    Loop(Vec<Typed>),
    Seq(Vec<Typed>),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Push(_) => "PUSH",
            Op::Drop => "DROP",
            Op::Dup => "DUP",
            Op::Swap => "SWAP",
            Op::Dip(_) => "DIP",
            Op::Pair => "PAIR",
            Op::Car => "CAR",
            Op::Cdr => "CDR",
            Op::Unit => "UNIT",
            Op::Some => "SOME",
            Op::None => "NONE",
            Op::Left => "LEFT",
            Op::Right => "RIGHT",
            Op::Cons => "CONS",
            Op::Nil => "NIL",
            Op::EmptyMap => "EMPTY_MAP",
            Op::Get => "GET",
            Op::Update => "UPDATE",
            Op::Mem => "MEM",
            Op::Add => "ADD",
            Op::Sub => "SUB",
            Op::Mul => "MUL",
            Op::Compare => "COMPARE",
            Op::Eq => "EQ",
            Op::Neq => "NEQ",
            Op::Lt => "LT",
            Op::Gt => "GT",
            Op::Le => "LE",
            Op::Ge => "GE",
            Op::If(..) => "IF",
            Op::IfNone(..) => "IF_NONE",
            Op::IfLeft(..) => "IF_LEFT",
            Op::And => "AND",
            Op::Or => "OR",
            Op::Not => "NOT",
            Op::Amount => "AMOUNT",
            Op::Balance => "BALANCE",
            Op::Sender => "SENDER",
            Op::Source => "SOURCE",
            Op::SelfContract(_) => "SELF",
            Op::Now => "NOW",
            Op::Address => "ADDRESS",
            Op::Contract(_) => "CONTRACT",
            Op::TransferTokens => "TRANSFER_TOKENS",
            Op::ImplicitAccount => "IMPLICIT_ACCOUNT",
            Op::Failwith => "FAILWITH",
            Op::Loop(_) => "LOOP",
            Op::Seq(_) => "{}",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StackState {
    Live(Vec<Ty>),
    /// After FAILWITH: unifies with any stack.
    Failed,
}

/// An instruction with the stack types around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Typed {
    pub op: Op,
    pub before: Vec<Ty>,
    pub after: StackState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub parameter: Ty,
    pub storage: Ty,
    pub code: Vec<Typed>,
    /// The macro-expanded source.
    pub source: RawProgram,
    /// Number of AST nodes, the basis of the typechecking gas charge.
    pub nodes: u64,
}

impl TypedProgram {
    pub fn typecheck_gas(&self) -> u64 {
        self.nodes * crate::gas::TYPECHECK_PER_NODE
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{instr}: stack underflow, needs {needed} element(s), stack is {stack}")]
    StackUnderflow { instr: String, needed: usize, stack: String },
    #[error("{context}: expected {expected}, found {found}")]
    TypeMismatch { context: String, expected: String, found: String },
    #[error("{instr}: branches end with different stacks {left} and {right}")]
    BranchMismatch { instr: String, left: String, right: String },
    #[error("type `{ty}` is not allowed in {context}")]
    IllegalOperationTy { context: String, ty: Ty },
    #[error("final stack must be [pair (list operation) {storage}], found {found}")]
    BadFinalStack { storage: Ty, found: String },
    #[error("FAILWITH is not allowed inside DIP")]
    FailInDip,
    #[error("{instr}: unreachable instruction after FAILWITH")]
    UnreachableCode { instr: String },
    #[error("map literal keys must be strictly ascending")]
    UnorderedMapLiteral,
    #[error("`{0}` is not a core instruction; expand macros first")]
    NotCore(String),
}

impl TypeError {
    /// Stable kind name, independent of the message details.
    pub fn kind(&self) -> &'static str {
        match self {
            TypeError::StackUnderflow { .. } => "StackUnderflow",
            TypeError::TypeMismatch { .. } => "TypeMismatch",
            TypeError::BranchMismatch { .. } => "BranchMismatch",
            TypeError::IllegalOperationTy { .. } => "IllegalOperationTy",
            TypeError::BadFinalStack { .. } => "BadFinalStack",
            TypeError::FailInDip => "FailInDip",
            TypeError::UnreachableCode { .. } => "UnreachableCode",
            TypeError::UnorderedMapLiteral => "UnorderedMapLiteral",
            TypeError::NotCore(_) => "NotCore",
        }
    }
}

/// Renders a top-last stack as `[top : ... : bottom]`.
pub fn show_stack(s: &[Ty]) -> String {
    let items: Vec<String> = s.iter().rev().map(|t| t.to_string()).collect();
    format!("[{}]", items.join(" : "))
}

fn show_state(s: &StackState) -> String {
    match s {
        StackState::Live(s) => show_stack(s),
        StackState::Failed => "[FAILED]".to_string(),
    }
}

struct Checker {
    parameter: Ty,
    dip_depth: usize,
}

fn underflow(instr: &str, needed: usize, s: &[Ty]) -> TypeError {
    TypeError::StackUnderflow { instr: instr.to_string(), needed, stack: show_stack(s) }
}

fn mismatch(instr: &str, expected: impl Into<String>, s: &[Ty]) -> TypeError {
    TypeError::TypeMismatch { context: instr.to_string(), expected: expected.into(), found: show_stack(s) }
}

fn need(instr: &str, s: &[Ty], n: usize) -> Result<(), TypeError> {
    if s.len() < n {
        Err(underflow(instr, n, s))
    } else {
        Ok(())
    }
}

fn top(s: &[Ty], i: usize) -> &Ty {
    &s[s.len() - 1 - i]
}

fn unify(instr: &str, a: StackState, b: StackState) -> Result<StackState, TypeError> {
    match (a, b) {
        (StackState::Failed, x) | (x, StackState::Failed) => Ok(x),
        (StackState::Live(x), StackState::Live(y)) if x == y => Ok(StackState::Live(x)),
        (x, y) => Err(TypeError::BranchMismatch {
            instr: instr.to_string(),
            left: show_state(&x),
            right: show_state(&y),
        }),
    }
}

fn check_pushable(context: &str, t: &Ty) -> Result<(), TypeError> {
    if t.contains_operation() || t.contains_contract() {
        return Err(TypeError::IllegalOperationTy { context: context.to_string(), ty: t.clone() });
    }
    Ok(())
}

fn arith(op: &Op, a: &Ty, b: &Ty) -> Option<Ty> {
    use Ty::*;
    match (op, a, b) {
        (Op::Add, Nat, Nat) | (Op::Mul, Nat, Nat) => Some(Nat),
        (Op::Add | Op::Sub | Op::Mul, Int | Nat, Int | Nat) => Some(Int),
        (Op::Add | Op::Sub, Mutez, Mutez) => Some(Mutez),
        (Op::Mul, Mutez, Nat) | (Op::Mul, Nat, Mutez) => Some(Mutez),
        (Op::Add, Timestamp, Int) | (Op::Add, Int, Timestamp) | (Op::Sub, Timestamp, Int) => Some(Timestamp),
        (Op::Sub, Timestamp, Timestamp) => Some(Int),
        _ => None,
    }
}

impl Checker {
    fn block(&mut self, b: &[Instr], input: Vec<Ty>) -> Result<(Vec<Typed>, StackState), TypeError> {
        let mut state = StackState::Live(input);
        let mut out = Vec::with_capacity(b.len());
        for i in b {
            let s = match state {
                StackState::Live(s) => s,
                StackState::Failed => return Err(TypeError::UnreachableCode { instr: i.name().to_string() }),
            };
            let t = self.instr(i, s)?;
            state = t.after.clone();
            out.push(t);
        }
        Ok((out, state))
    }

    fn instr(&mut self, i: &Instr, mut s: Vec<Ty>) -> Result<Typed, TypeError> {
        let before = s.clone();
        let name = i.name();
        let live = |op: Op, s: Vec<Ty>| Ok(Typed { op, before: before.clone(), after: StackState::Live(s) });

        match i {
            Instr::Push(t, d) => {
                check_pushable("PUSH", t)?;
                let v = check_data(d, t)?;
                s.push(t.clone());
                live(Op::Push(v), s)
            }
            Instr::Drop => {
                need(name, &s, 1)?;
                s.pop();
                live(Op::Drop, s)
            }
            Instr::Dup => {
                need(name, &s, 1)?;
                s.push(top(&s, 0).clone());
                live(Op::Dup, s)
            }
            Instr::Swap => {
                need(name, &s, 2)?;
                let n = s.len();
                s.swap(n - 1, n - 2);
                live(Op::Swap, s)
            }
            Instr::Dip(b) => {
                need(name, &s, 1)?;
                let t = s.pop().expect("checked");
                self.dip_depth += 1;
                let res = self.block(b, s);
                self.dip_depth -= 1;
                let (body, out) = res?;
                match out {
                    StackState::Live(mut s) => {
                        s.push(t);
                        live(Op::Dip(body), s)
                    }
                    StackState::Failed => Err(TypeError::FailInDip),
                }
            }
            Instr::Pair => {
                need(name, &s, 2)?;
                let a = s.pop().expect("checked");
                let b = s.pop().expect("checked");
                s.push(Ty::pair(a, b));
                live(Op::Pair, s)
            }
            Instr::Car | Instr::Cdr => {
                need(name, &s, 1)?;
                match s.pop().expect("checked") {
                    Ty::Pair(a, b) => {
                        let car = matches!(i, Instr::Car);
                        s.push(if car { *a } else { *b });
                        live(if car { Op::Car } else { Op::Cdr }, s)
                    }
                    other => {
                        s.push(other);
                        Err(mismatch(name, "pair on top", &s))
                    }
                }
            }
            Instr::Unit => {
                s.push(Ty::Unit);
                live(Op::Unit, s)
            }
            Instr::Some => {
                need(name, &s, 1)?;
                let a = s.pop().expect("checked");
                s.push(Ty::option(a));
                live(Op::Some, s)
            }
            Instr::None(t) => {
                s.push(Ty::option(t.clone()));
                live(Op::None, s)
            }
            Instr::Left(r) => {
                need(name, &s, 1)?;
                let a = s.pop().expect("checked");
                s.push(Ty::or(a, r.clone()));
                live(Op::Left, s)
            }
            Instr::Right(l) => {
                need(name, &s, 1)?;
                let b = s.pop().expect("checked");
                s.push(Ty::or(l.clone(), b));
                live(Op::Right, s)
            }
            Instr::Cons => {
                need(name, &s, 2)?;
                match top(&s, 1) {
                    Ty::List(e) if **e == *top(&s, 0) => {
                        s.pop();
                        live(Op::Cons, s)
                    }
                    _ => Err(mismatch(name, "'a : list 'a", &s)),
                }
            }
            Instr::Nil(t) => {
                s.push(Ty::list(t.clone()));
                live(Op::Nil, s)
            }
            Instr::EmptyMap(k, v) => {
                if !k.is_comparable() {
                    return Err(TypeError::TypeMismatch {
                        context: name.to_string(),
                        expected: "comparable key type".into(),
                        found: k.to_string(),
                    });
                }
                s.push(Ty::map(k.clone(), v.clone()));
                live(Op::EmptyMap, s)
            }
            Instr::Get | Instr::Mem => {
                need(name, &s, 2)?;
                match top(&s, 1) {
                    Ty::Map(k, v) if **k == *top(&s, 0) => {
                        let result = if matches!(i, Instr::Get) { Ty::option((**v).clone()) } else { Ty::Bool };
                        s.truncate(s.len() - 2);
                        s.push(result);
                        live(if matches!(i, Instr::Get) { Op::Get } else { Op::Mem }, s)
                    }
                    _ => Err(mismatch(name, "'k : map 'k 'v", &s)),
                }
            }
            Instr::Update => {
                need(name, &s, 3)?;
                match (top(&s, 0), top(&s, 1), top(&s, 2)) {
                    (key, Ty::Option(val), Ty::Map(k, v)) if **k == *key && **v == **val => {
                        s.truncate(s.len() - 2);
                        live(Op::Update, s)
                    }
                    _ => Err(mismatch(name, "'k : option 'v : map 'k 'v", &s)),
                }
            }
            Instr::Add | Instr::Sub | Instr::Mul => {
                need(name, &s, 2)?;
                let op = match i {
                    Instr::Add => Op::Add,
                    Instr::Sub => Op::Sub,
                    _ => Op::Mul,
                };
                match arith(&op, top(&s, 0), top(&s, 1)) {
                    Some(r) => {
                        s.truncate(s.len() - 2);
                        s.push(r);
                        live(op, s)
                    }
                    None => Err(mismatch(name, "numeric operands", &s)),
                }
            }
            Instr::Compare => {
                need(name, &s, 2)?;
                let (a, b) = (top(&s, 0), top(&s, 1));
                if a != b || !a.is_comparable() {
                    return Err(mismatch(name, "two values of the same comparable type", &s));
                }
                s.truncate(s.len() - 2);
                s.push(Ty::Int);
                live(Op::Compare, s)
            }
            Instr::Eq | Instr::Neq | Instr::Lt | Instr::Gt | Instr::Le | Instr::Ge => {
                need(name, &s, 1)?;
                if *top(&s, 0) != Ty::Int {
                    return Err(mismatch(name, "int on top", &s));
                }
                s.pop();
                s.push(Ty::Bool);
                let op = match i {
                    Instr::Eq => Op::Eq,
                    Instr::Neq => Op::Neq,
                    Instr::Lt => Op::Lt,
                    Instr::Gt => Op::Gt,
                    Instr::Le => Op::Le,
                    _ => Op::Ge,
                };
                live(op, s)
            }
            Instr::If(a, b) => {
                need(name, &s, 1)?;
                if *top(&s, 0) != Ty::Bool {
                    return Err(mismatch(name, "bool on top", &s));
                }
                s.pop();
                let (ta, sa) = self.block(a, s.clone())?;
                let (tb, sb) = self.block(b, s)?;
                let after = unify(name, sa, sb)?;
                Ok(Typed { op: Op::If(ta, tb), before, after })
            }
            Instr::IfNone(a, b) => {
                need(name, &s, 1)?;
                let inner = match top(&s, 0) {
                    Ty::Option(t) => (**t).clone(),
                    _ => return Err(mismatch(name, "option on top", &s)),
                };
                s.pop();
                let (ta, sa) = self.block(a, s.clone())?;
                s.push(inner);
                let (tb, sb) = self.block(b, s)?;
                let after = unify(name, sa, sb)?;
                Ok(Typed { op: Op::IfNone(ta, tb), before, after })
            }
            Instr::IfLeft(a, b) => {
                need(name, &s, 1)?;
                let (l, r) = match top(&s, 0) {
                    Ty::Or(l, r) => ((**l).clone(), (**r).clone()),
                    _ => return Err(mismatch(name, "or on top", &s)),
                };
                s.pop();
                let mut sl = s.clone();
                sl.push(l);
                s.push(r);
                let (ta, sa) = self.block(a, sl)?;
                let (tb, sb) = self.block(b, s)?;
                let after = unify(name, sa, sb)?;
                Ok(Typed { op: Op::IfLeft(ta, tb), before, after })
            }
            Instr::And | Instr::Or => {
                need(name, &s, 2)?;
                if *top(&s, 0) != Ty::Bool || *top(&s, 1) != Ty::Bool {
                    return Err(mismatch(name, "bool : bool", &s));
                }
                s.pop();
                live(if matches!(i, Instr::And) { Op::And } else { Op::Or }, s)
            }
            Instr::Not => {
                need(name, &s, 1)?;
                if *top(&s, 0) != Ty::Bool {
                    return Err(mismatch(name, "bool on top", &s));
                }
                live(Op::Not, s)
            }
            Instr::Amount | Instr::Balance => {
                s.push(Ty::Mutez);
                live(if matches!(i, Instr::Amount) { Op::Amount } else { Op::Balance }, s)
            }
            Instr::Sender | Instr::Source => {
                s.push(Ty::Address);
                live(if matches!(i, Instr::Sender) { Op::Sender } else { Op::Source }, s)
            }
            Instr::SelfContract => {
                s.push(Ty::contract(self.parameter.clone()));
                live(Op::SelfContract(self.parameter.clone()), s)
            }
            Instr::Now => {
                s.push(Ty::Timestamp);
                live(Op::Now, s)
            }
            Instr::Address => {
                need(name, &s, 1)?;
                if !matches!(top(&s, 0), Ty::Contract(_)) {
                    return Err(mismatch(name, "contract on top", &s));
                }
                s.pop();
                s.push(Ty::Address);
                live(Op::Address, s)
            }
            Instr::Contract(t) => {
                need(name, &s, 1)?;
                if t.contains_operation() {
                    return Err(TypeError::IllegalOperationTy { context: "CONTRACT".into(), ty: t.clone() });
                }
                if *top(&s, 0) != Ty::Address {
                    return Err(mismatch(name, "address on top", &s));
                }
                s.pop();
                s.push(Ty::option(Ty::contract(t.clone())));
                live(Op::Contract(t.clone()), s)
            }
            Instr::TransferTokens => {
                need(name, &s, 3)?;
                match (top(&s, 0), top(&s, 1), top(&s, 2)) {
                    (arg, Ty::Mutez, Ty::Contract(p)) if **p == *arg => {
                        s.truncate(s.len() - 3);
                        s.push(Ty::Operation);
                        live(Op::TransferTokens, s)
                    }
                    _ => Err(mismatch(name, "'p : mutez : contract 'p", &s)),
                }
            }
            Instr::ImplicitAccount => {
                need(name, &s, 1)?;
                if *top(&s, 0) != Ty::KeyHash {
                    return Err(mismatch(name, "key_hash on top", &s));
                }
                s.pop();
                s.push(Ty::contract(Ty::Unit));
                live(Op::ImplicitAccount, s)
            }
            Instr::Failwith => {
                need(name, &s, 1)?;
                if self.dip_depth > 0 {
                    return Err(TypeError::FailInDip);
                }
                Ok(Typed { op: Op::Failwith, before, after: StackState::Failed })
            }
            Instr::Loop(b) => {
                need(name, &s, 1)?;
                if *top(&s, 0) != Ty::Bool {
                    return Err(mismatch(name, "bool on top", &s));
                }
                let mut rest = s.clone();
                rest.pop();
                let (body, out) = self.block(b, rest.clone())?;
                match out {
                    StackState::Live(o) if o == s => {}
                    StackState::Failed => {}
                    StackState::Live(o) => {
                        return Err(TypeError::TypeMismatch {
                            context: "LOOP body".into(),
                            expected: show_stack(&s),
                            found: show_stack(&o),
                        })
                    }
                }
                live(Op::Loop(body), rest)
            }
            Instr::Seq(b) => {
                let (body, after) = self.block(b, s)?;
                Ok(Typed { op: Op::Seq(body), before, after })
            }
            Instr::Macro(_) => Err(TypeError::NotCore(name.to_string())),
        }
    }
}

/// Types one instruction against `input` (top-last). `SELF` is typed as
/// `contract unit` outside a program.
pub fn typecheck_instr(i: &Instr, input: &[Ty]) -> Result<Typed, TypeError> {
    Checker { parameter: Ty::Unit, dip_depth: 0 }.instr(i, input.to_vec())
}

pub fn typecheck_program(p: &RawProgram) -> Result<TypedProgram, TypeError> {
    for (ctx, t) in [("parameter", &p.parameter), ("storage", &p.storage)] {
        if t.contains_operation() || t.contains_contract() {
            return Err(TypeError::IllegalOperationTy { context: ctx.to_string(), ty: t.clone() });
        }
    }
    let mut c = Checker { parameter: p.parameter.clone(), dip_depth: 0 };
    let (code, out) = c.block(&p.code, vec![Ty::pair(p.parameter.clone(), p.storage.clone())])?;
    let expected = Ty::pair(Ty::list(Ty::Operation), p.storage.clone());
    match out {
        StackState::Failed => {}
        StackState::Live(s) if s.len() == 1 && s[0] == expected => {}
        StackState::Live(s) => {
            return Err(TypeError::BadFinalStack { storage: p.storage.clone(), found: show_stack(&s) });
        }
    }
    Ok(TypedProgram {
        parameter: p.parameter.clone(),
        storage: p.storage.clone(),
        code,
        source: p.clone(),
        nodes: block_node_count(&p.code) + 3,
    })
}

fn data_mismatch(d: &Data, t: &Ty) -> TypeError {
    TypeError::TypeMismatch { context: "data".into(), expected: t.to_string(), found: d.to_string() }
}

/// Checks a literal against a type and builds the runtime value.
pub fn check_data(d: &Data, t: &Ty) -> Result<Value, TypeError> {
    let bad = || data_mismatch(d, t);
    Ok(match (t, d) {
        (Ty::Int, Data::Int(i)) => Value::Int(i.clone()),
        (Ty::Nat, Data::Int(i)) if i.sign() != Sign::Minus => Value::Nat(i.clone()),
        (Ty::Mutez, Data::Int(i)) => Value::Mutez(i.to_u64().ok_or_else(bad)?),
        (Ty::String, Data::Str(s)) => Value::String(s.clone()),
        (Ty::Timestamp, Data::Str(s)) => Value::Timestamp(parse_timestamp(s).ok_or_else(bad)?),
        (Ty::Timestamp, Data::Int(i)) => Value::Timestamp(i.to_i64().ok_or_else(bad)?),
        (Ty::Bool, Data::True) => Value::Bool(true),
        (Ty::Bool, Data::False) => Value::Bool(false),
        (Ty::Unit, Data::Unit) => Value::Unit,
        (Ty::Address, Data::Str(s)) => Value::Address(s.parse::<Address>().map_err(|_| bad())?),
        (Ty::KeyHash, Data::Str(s)) => {
            let a = s.parse::<Address>().map_err(|_| bad())?;
            if !a.is_implicit() {
                return Err(bad());
            }
            Value::KeyHash(a)
        }
        (Ty::Contract(p), Data::Str(s)) => Value::Contract(s.parse::<Address>().map_err(|_| bad())?, (**p).clone()),
        (Ty::Pair(a, b), Data::Pair(x, y)) => Value::pair(check_data(x, a)?, check_data(y, b)?),
        (Ty::Or(a, _), Data::Left(x)) => Value::left(check_data(x, a)?),
        (Ty::Or(_, b), Data::Right(x)) => Value::right(check_data(x, b)?),
        (Ty::Option(a), Data::Some(x)) => Value::some(check_data(x, a)?),
        (Ty::Option(_), Data::None) => Value::None,
        (Ty::List(a), Data::Seq(items)) => Value::List(items.iter().map(|x| check_data(x, a)).collect::<Result<_, _>>()?),
        (Ty::Map(kt, vt), Data::Seq(items)) => {
            let mut m = BTreeMap::new();
            let mut last: Option<Value> = None;
            for item in items {
                let (k, v) = match item {
                    Data::Elt(k, v) => (check_data(k, kt)?, check_data(v, vt)?),
                    _ => return Err(data_mismatch(item, &Ty::pair((**kt).clone(), (**vt).clone()))),
                };
                if last.as_ref().is_some_and(|l| *l >= k) {
                    return Err(TypeError::UnorderedMapLiteral);
                }
                last = Some(k.clone());
                m.insert(k, v);
            }
            Value::Map(m)
        }
        (Ty::Operation, _) => return Err(TypeError::IllegalOperationTy { context: "data".into(), ty: Ty::Operation }),
        _ => return Err(bad()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Parses a literal and checks it against `expected`.
pub fn parse_data(src: &str, expected: &Ty) -> Result<Value, DataError> {
    let d = Data::parse(src)?;
    Ok(check_data(&d, expected)?)
}

/// Checks that a value has type `t` (used for values built outside the
/// typechecker, such as fuzzed inputs).
pub fn value_has_type(v: &Value, t: &Ty) -> bool {
    match (v, t) {
        (Value::Int(_), Ty::Int) => true,
        (Value::Nat(n), Ty::Nat) => n.sign() != Sign::Minus,
        (Value::Mutez(_), Ty::Mutez)
        | (Value::String(_), Ty::String)
        | (Value::Timestamp(_), Ty::Timestamp)
        | (Value::Bool(_), Ty::Bool)
        | (Value::Unit, Ty::Unit)
        | (Value::Address(_), Ty::Address)
        | (Value::None, Ty::Option(_)) => true,
        (Value::KeyHash(a), Ty::KeyHash) => a.is_implicit(),
        (Value::Pair(a, b), Ty::Pair(x, y)) => value_has_type(a, x) && value_has_type(b, y),
        (Value::Left(a), Ty::Or(x, _)) | (Value::Right(a), Ty::Or(_, x)) | (Value::Some(a), Ty::Option(x)) => {
            value_has_type(a, x)
        }
        (Value::List(l), Ty::List(x)) => l.iter().all(|e| value_has_type(e, x)),
        (Value::Map(m), Ty::Map(k, v)) => m.iter().all(|(a, b)| value_has_type(a, k) && value_has_type(b, v)),
        (Value::Operation(_), Ty::Operation) => true,
        (Value::Contract(_, p), Ty::Contract(q)) => p == &**q,
        _ => false,
    }
}

/// Integer value of a nat/int literal, used by tests and the CLI.
pub fn as_bigint(v: &Value) -> Option<&BigInt> {
    match v {
        Value::Int(i) | Value::Nat(i) => Some(i),
        _ => None,
    }
}
