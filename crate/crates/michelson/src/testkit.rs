//! Random well-typed programs and values, plus a corpus of ill-typed
//! programs. Used by the soundness tests.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::address::Address;
use crate::interp::ContractTypes;
use crate::syntax::{Data, Instr, RawProgram};
use crate::types::Ty;
use crate::value::Value;

/// `(expected error kind, source)` pairs, one program per non-comment line
/// of the corpus file.
pub fn ill_typed_corpus() -> Vec<(&'static str, &'static str)> {
    include_str!("../testdata/ill_typed.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("//"))
        .map(|l| {
            let (kind, src) = l.split_once('|').expect("corpus line is `Kind | source`");
            (kind.trim(), src.trim())
        })
        .collect()
}

pub fn implicit_pool() -> Vec<Address> {
    (1..=3).map(|i| Address::implicit([i; 20])).collect()
}

pub fn originated_pool() -> Vec<Address> {
    (11..=13).map(|i| Address::originated([i; 20])).collect()
}

/// Parameter types for the originated pool, chosen per fuzz case.
pub struct FuzzContracts(pub BTreeMap<Address, Ty>);

impl ContractTypes for FuzzContracts {
    fn parameter_type(&self, addr: &Address) -> Option<Ty> {
        if addr.is_implicit() {
            Some(Ty::Unit)
        } else {
            self.0.get(addr).cloned()
        }
    }
}

const COMPARABLE: [Ty; 8] =
    [Ty::Int, Ty::Nat, Ty::Mutez, Ty::String, Ty::Timestamp, Ty::Bool, Ty::Address, Ty::KeyHash];

pub fn random_comparable<R: Rng>(rng: &mut R) -> Ty {
    COMPARABLE.choose(rng).expect("non-empty").clone()
}

/// A type without `operation` or `contract`.
pub fn random_ty<R: Rng>(rng: &mut R, depth: u32) -> Ty {
    if depth == 0 || rng.gen_bool(0.55) {
        return if rng.gen_bool(0.9) { random_comparable(rng) } else { Ty::Unit };
    }
    match rng.gen_range(0..5) {
        0 => Ty::pair(random_ty(rng, depth - 1), random_ty(rng, depth - 1)),
        1 => Ty::or(random_ty(rng, depth - 1), random_ty(rng, depth - 1)),
        2 => Ty::option(random_ty(rng, depth - 1)),
        3 => Ty::list(random_ty(rng, depth - 1)),
        _ => Ty::map(random_comparable(rng), random_ty(rng, depth - 1)),
    }
}

const WORDS: [&str; 6] = ["", "a", "b", "Summit", "Sierra", "zz"];

pub fn random_value<R: Rng>(rng: &mut R, t: &Ty) -> Value {
    match t {
        Ty::Int => Value::int(rng.gen_range(-50i64..50)),
        Ty::Nat => Value::nat(rng.gen_range(0u64..50)),
        Ty::Mutez => Value::Mutez(if rng.gen_bool(0.05) { u64::MAX - rng.gen_range(0..3) } else { rng.gen_range(0..10_000) }),
        Ty::String => Value::string(*WORDS.choose(rng).expect("non-empty")),
        Ty::Timestamp => Value::Timestamp(rng.gen_range(1_500_000_000i64..1_600_000_000)),
        Ty::Bool => Value::Bool(rng.gen()),
        Ty::Unit => Value::Unit,
        Ty::Address => {
            let pool = if rng.gen() { implicit_pool() } else { originated_pool() };
            Value::Address(*pool.choose(rng).expect("non-empty"))
        }
        Ty::KeyHash => Value::KeyHash(*implicit_pool().choose(rng).expect("non-empty")),
        Ty::Pair(a, b) => Value::pair(random_value(rng, a), random_value(rng, b)),
        Ty::Or(a, b) => {
            if rng.gen() {
                Value::left(random_value(rng, a))
            } else {
                Value::right(random_value(rng, b))
            }
        }
        Ty::Option(a) => {
            if rng.gen() {
                Value::some(random_value(rng, a))
            } else {
                Value::None
            }
        }
        Ty::List(a) => Value::List((0..rng.gen_range(0..4)).map(|_| random_value(rng, a)).collect()),
        Ty::Map(k, v) => {
            Value::Map((0..rng.gen_range(0..4)).map(|_| (random_value(rng, k), random_value(rng, v))).collect())
        }
        Ty::Contract(p) => Value::Contract(*originated_pool().choose(rng).expect("non-empty"), (**p).clone()),
        Ty::Operation => panic!("operations have no literal"),
    }
}

fn push<R: Rng>(rng: &mut R, t: &Ty) -> Instr {
    Instr::Push(t.clone(), random_value(rng, t).to_data(true))
}

fn pushable(t: &Ty) -> bool {
    !t.contains_contract() && !t.contains_operation()
}

fn is_arith(t: &Ty) -> bool {
    matches!(t, Ty::Int | Ty::Nat | Ty::Mutez | Ty::Timestamp)
}

/// Type-directed generator: every emitted instruction is applicable to the
/// stack it tracks, so the result typechecks by construction.
pub struct ProgramGen<'r, R: Rng> {
    rng: &'r mut R,
    budget: usize,
    parameter: Ty,
}

enum End {
    Live(Vec<Ty>),
    Failed,
}

impl<'r, R: Rng> ProgramGen<'r, R> {
    pub fn new(rng: &'r mut R, budget: usize) -> Self {
        ProgramGen { rng, budget, parameter: Ty::Unit }
    }

    pub fn program(&mut self) -> RawProgram {
        let parameter = random_ty(self.rng, 2);
        let storage = random_ty(self.rng, 2);
        self.parameter = parameter.clone();
        let (mut code, end) = self.block(vec![Ty::pair(parameter.clone(), storage.clone())], false, 3);
        if let End::Live(s) = end {
            code.extend(std::iter::repeat(Instr::Drop).take(s.len()));
            code.push(push(self.rng, &storage));
            code.push(Instr::Nil(Ty::Operation));
            code.push(Instr::Pair);
        }
        RawProgram { parameter, storage, code }
    }

    /// Instructions that leave the stack unchanged.
    fn neutral(&mut self, s: &[Ty], depth: u32) -> Vec<Instr> {
        let mut out = Vec::new();
        for _ in 0..self.rng.gen_range(0..3) {
            match self.rng.gen_range(0..4) {
                0 => {
                    let t = random_ty(self.rng, 1);
                    out.push(push(self.rng, &t));
                    out.push(Instr::Drop);
                }
                1 if !s.is_empty() => out.extend([Instr::Dup, Instr::Drop]),
                2 if s.len() >= 2 => out.extend([Instr::Swap, Instr::Swap]),
                3 if !s.is_empty() && depth > 0 => {
                    let inner = self.neutral(&s[..s.len() - 1], depth - 1);
                    out.push(Instr::Dip(inner));
                }
                _ => {}
            }
        }
        out
    }

    fn block(&mut self, mut s: Vec<Ty>, in_dip: bool, depth: u32) -> (Vec<Instr>, End) {
        let mut out = Vec::new();
        let len = self.rng.gen_range(1..8);
        for _ in 0..len {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            if !in_dip && !s.is_empty() && self.rng.gen_bool(0.02) {
                out.push(Instr::Failwith);
                return (out, End::Failed);
            }
            if s.len() > 6 {
                out.push(Instr::Drop);
                s.pop();
                continue;
            }
            if let Some(failed) = self.step(&mut s, &mut out, in_dip, depth) {
                if failed {
                    return (out, End::Failed);
                }
            }
        }
        (out, End::Live(s))
    }

    /// Emits one instruction or recipe. Returns `Some(true)` if the block
    /// can no longer continue.
    fn step(&mut self, s: &mut Vec<Ty>, out: &mut Vec<Instr>, in_dip: bool, depth: u32) -> Option<bool> {
        let top = s.last().cloned();
        let second = s.len().checked_sub(2).map(|i| s[i].clone());
        let choice = self.rng.gen_range(0..24);
        match (choice, top.as_ref()) {
            (0, _) => {
                let t = random_ty(self.rng, 2);
                out.push(push(self.rng, &t));
                s.push(t);
            }
            (1, Some(_)) => {
                out.push(Instr::Drop);
                s.pop();
            }
            (2, Some(t)) => {
                out.push(Instr::Dup);
                s.push(t.clone());
            }
            (3, Some(_)) if s.len() >= 2 => {
                out.push(Instr::Swap);
                let n = s.len();
                s.swap(n - 1, n - 2);
            }
            (4, Some(_)) if depth > 0 => {
                let t = s.pop().expect("non-empty");
                let (body, end) = self.block(s.clone(), true, depth - 1);
                match end {
                    End::Live(inner) => *s = inner,
                    End::Failed => unreachable!("no FAILWITH under DIP"),
                }
                s.push(t);
                out.push(Instr::Dip(body));
            }
            (5, Some(_)) if s.len() >= 2 => {
                out.push(Instr::Pair);
                let a = s.pop().expect("len");
                let b = s.pop().expect("len");
                s.push(Ty::pair(a, b));
            }
            (6, Some(Ty::Pair(a, b))) => {
                let car = self.rng.gen();
                out.push(if car { Instr::Car } else { Instr::Cdr });
                let r = if car { (**a).clone() } else { (**b).clone() };
                s.pop();
                s.push(r);
            }
            (7, Some(t)) => {
                let other = random_ty(self.rng, 1);
                let t = t.clone();
                s.pop();
                match self.rng.gen_range(0..3) {
                    0 => {
                        out.push(Instr::Some);
                        s.push(Ty::option(t));
                    }
                    1 => {
                        out.push(Instr::Left(other.clone()));
                        s.push(Ty::or(t, other));
                    }
                    _ => {
                        out.push(Instr::Right(other.clone()));
                        s.push(Ty::or(other, t));
                    }
                }
            }
            (8, _) => {
                let t = random_ty(self.rng, 1);
                match self.rng.gen_range(0..4) {
                    0 => {
                        out.push(Instr::None(t.clone()));
                        s.push(Ty::option(t));
                    }
                    1 => {
                        out.push(Instr::Nil(t.clone()));
                        s.push(Ty::list(t));
                    }
                    2 => {
                        let k = random_comparable(self.rng);
                        out.push(Instr::EmptyMap(k.clone(), t.clone()));
                        s.push(Ty::map(k, t));
                    }
                    _ => {
                        out.push(Instr::Unit);
                        s.push(Ty::Unit);
                    }
                }
            }
            (9, Some(Ty::List(e))) if pushable(e) => {
                let e = (**e).clone();
                out.push(push(self.rng, &e));
                out.push(Instr::Cons);
            }
            (10, Some(Ty::Map(k, v))) if pushable(v) => {
                let (k, v) = ((**k).clone(), (**v).clone());
                match self.rng.gen_range(0..3) {
                    0 => {
                        out.push(push(self.rng, &k));
                        out.push(Instr::Get);
                        s.pop();
                        s.push(Ty::option(v));
                    }
                    1 => {
                        out.push(push(self.rng, &k));
                        out.push(Instr::Mem);
                        s.pop();
                        s.push(Ty::Bool);
                    }
                    _ => {
                        out.push(push(self.rng, &Ty::option(v)));
                        out.push(push(self.rng, &k));
                        out.push(Instr::Update);
                    }
                }
            }
            (11, Some(t)) if is_arith(t) => {
                // (instruction, operand pushed on top, result); SUB is top minus second
                let table: Vec<(Instr, Ty, Ty)> = match t {
                    Ty::Int => vec![
                        (Instr::Add, Ty::Nat, Ty::Int),
                        (Instr::Sub, Ty::Int, Ty::Int),
                        (Instr::Mul, Ty::Nat, Ty::Int),
                        (Instr::Add, Ty::Timestamp, Ty::Timestamp),
                    ],
                    Ty::Nat => vec![
                        (Instr::Add, Ty::Nat, Ty::Nat),
                        (Instr::Sub, Ty::Nat, Ty::Int),
                        (Instr::Mul, Ty::Nat, Ty::Nat),
                        (Instr::Mul, Ty::Mutez, Ty::Mutez),
                    ],
                    Ty::Mutez => vec![
                        (Instr::Add, Ty::Mutez, Ty::Mutez),
                        (Instr::Sub, Ty::Mutez, Ty::Mutez),
                        (Instr::Mul, Ty::Nat, Ty::Mutez),
                    ],
                    _ => vec![(Instr::Add, Ty::Int, Ty::Timestamp), (Instr::Sub, Ty::Timestamp, Ty::Int)],
                };
                let (op, operand, result) = table.choose(self.rng).expect("non-empty").clone();
                out.push(push(self.rng, &operand));
                out.push(op);
                s.pop();
                s.push(result);
            }
            (12, Some(t)) if t.is_comparable() => {
                out.extend([Instr::Dup, Instr::Compare]);
                s.pop();
                s.push(Ty::Int);
            }
            (13, Some(Ty::Int)) => {
                out.push([Instr::Eq, Instr::Neq, Instr::Lt, Instr::Gt, Instr::Le, Instr::Ge].choose(self.rng).expect("non-empty").clone());
                s.pop();
                s.push(Ty::Bool);
            }
            (14, Some(Ty::Bool)) => {
                match self.rng.gen_range(0..3) {
                    0 => out.push(Instr::Not),
                    1 => out.extend([Instr::Dup, Instr::And]),
                    _ => out.extend([Instr::Dup, Instr::Or]),
                }
            }
            (15, Some(Ty::Bool)) if depth > 0 => {
                s.pop();
                return Some(self.branches(s, out, in_dip, depth, Branch::If));
            }
            (16, Some(Ty::Option(_))) if depth > 0 => {
                s.pop();
                return Some(self.branches(s, out, in_dip, depth, Branch::IfNone));
            }
            (17, Some(Ty::Or(l, _))) if depth > 0 => {
                let l = (**l).clone();
                s.pop();
                return Some(self.branches(s, out, in_dip, depth, Branch::IfLeft(l)));
            }
            (18, Some(Ty::Bool)) if depth > 0 => {
                s.pop();
                let mut body = self.neutral(s, 1);
                body.push(Instr::Push(Ty::Bool, if self.rng.gen_bool(0.1) { Data::True } else { Data::False }));
                out.push(Instr::Loop(body));
            }
            (19, _) => {
                let (i, t) = match self.rng.gen_range(0..6) {
                    0 => (Instr::Amount, Ty::Mutez),
                    1 => (Instr::Balance, Ty::Mutez),
                    2 => (Instr::Sender, Ty::Address),
                    3 => (Instr::Source, Ty::Address),
                    4 => (Instr::Now, Ty::Timestamp),
                    _ => (Instr::SelfContract, Ty::contract(self.parameter.clone())),
                };
                out.push(i);
                s.push(t);
            }
            (20, Some(Ty::Address)) => {
                let t = if self.rng.gen() { Ty::Unit } else { random_ty(self.rng, 1) };
                out.push(Instr::Contract(t.clone()));
                s.pop();
                s.push(Ty::option(Ty::contract(t)));
            }
            (21, Some(Ty::Contract(p))) => {
                let p = (**p).clone();
                if self.rng.gen() {
                    out.push(Instr::Address);
                    s.pop();
                    s.push(Ty::Address);
                } else {
                    out.push(push(self.rng, &Ty::Mutez));
                    out.push(push(self.rng, &p));
                    out.push(Instr::TransferTokens);
                    s.pop();
                    s.push(Ty::Operation);
                }
            }
            (22, _) => {
                out.push(push(self.rng, &Ty::KeyHash));
                out.push(Instr::ImplicitAccount);
                s.push(Ty::contract(Ty::Unit));
            }
            (23, _) if depth > 0 => {
                let (body, end) = self.block(s.clone(), in_dip, depth - 1);
                out.push(Instr::Seq(body));
                match end {
                    End::Live(inner) => *s = inner,
                    End::Failed => return Some(true),
                }
            }
            _ => {
                if let (Some(a), Some(b)) = (top.as_ref(), second.as_ref()) {
                    if a == b && a.is_comparable() {
                        out.push(Instr::Compare);
                        s.truncate(s.len() - 2);
                        s.push(Ty::Int);
                        return None;
                    }
                }
                let t = random_ty(self.rng, 1);
                out.push(push(self.rng, &t));
                s.push(t);
            }
        }
        None
    }

    /// Emits an IF-family instruction whose arms converge. `s` is the stack
    /// below the scrutinee. Returns true if both arms fail.
    fn branches(&mut self, s: &mut Vec<Ty>, out: &mut Vec<Instr>, in_dip: bool, depth: u32, kind: Branch) -> bool {
        // first arm is generated freely, the second reaches the same stack
        let (first_in, prefix_for_second): (Vec<Ty>, Vec<Instr>) = match &kind {
            Branch::If => (s.clone(), vec![]),
            // the None arm runs on `s`; the Some arm drops its payload first
            Branch::IfNone => (s.clone(), vec![Instr::Drop]),
            Branch::IfLeft(l) if pushable(l) => {
                let mut fs = s.clone();
                fs.push(l.clone());
                let l = l.clone();
                (fs, vec![Instr::Drop, push(self.rng, &l)])
            }
            // both arms discard the payload and share a body
            Branch::IfLeft(_) => (s.clone(), vec![Instr::Drop]),
        };
        let (mut a, end) = self.block(first_in, in_dip, depth - 1);
        let shared = a.clone();
        if matches!(&kind, Branch::IfLeft(l) if !pushable(l)) {
            a.insert(0, Instr::Drop);
        }
        let fail_second = !in_dip && matches!(end, End::Live(_)) && self.rng.gen_bool(0.2);
        let mut b = prefix_for_second;
        b.extend(self.neutral(s, 1));
        if fail_second {
            b.push(Instr::Push(Ty::String, Data::Str("boom".into())));
            b.push(Instr::Failwith);
        } else {
            b.extend(shared);
        }
        let (a, b) = if self.rng.gen() && matches!(kind, Branch::If) { (b, a) } else { (a, b) };
        out.push(match kind {
            Branch::If => Instr::If(a, b),
            Branch::IfNone => Instr::IfNone(a, b),
            Branch::IfLeft(_) => Instr::IfLeft(a, b),
        });
        match end {
            End::Live(after) => {
                *s = after;
                false
            }
            // the second arm replays the first one, so it fails too
            End::Failed => true,
        }
    }
}

enum Branch {
    If,
    IfNone,
    IfLeft(Ty),
}
