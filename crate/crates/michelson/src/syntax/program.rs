use num_bigint::BigInt;

use super::node::{parse_expr, parse_toplevel, Node, NodeKind};
use super::{ParseError, SyntaxError};
use crate::types::Ty;

/// Untyped data literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Data {
    Int(BigInt),
    Str(String),
    Unit,
    True,
    False,
    Pair(Box<Data>, Box<Data>),
    Left(Box<Data>),
    Right(Box<Data>),
    Some(Box<Data>),
    None,
    Seq(Vec<Data>),
    Elt(Box<Data>, Box<Data>),
}

impl Data {
    pub fn pair(a: Data, b: Data) -> Data {
        Data::Pair(Box::new(a), Box::new(b))
    }

    pub fn from_node(n: &Node) -> Result<Data, SyntaxError> {
        match &n.kind {
            NodeKind::Int(i) => Ok(Data::Int(i.clone())),
            NodeKind::Str(s) => Ok(Data::Str(s.clone())),
            NodeKind::Seq(items) => Ok(Data::Seq(items.iter().map(Data::from_node).collect::<Result<_, _>>()?)),
            NodeKind::Prim(name, args) => {
                let want = |k: usize| -> Result<(), SyntaxError> {
                    if args.len() == k {
                        Ok(())
                    } else {
                        Err(SyntaxError::new(
                            n.pos,
                            format!("{k} argument(s) for `{name}`"),
                            format!("{} argument(s)", args.len()),
                        ))
                    }
                };
                let d = |i: usize| Data::from_node(&args[i]).map(Box::new);
                match name.as_str() {
                    "Unit" => want(0).map(|_| Data::Unit),
                    "True" => want(0).map(|_| Data::True),
                    "False" => want(0).map(|_| Data::False),
                    "None" => want(0).map(|_| Data::None),
                    "Pair" => {
                        want(2)?;
                        Ok(Data::Pair(d(0)?, d(1)?))
                    }
                    "Elt" => {
                        want(2)?;
                        Ok(Data::Elt(d(0)?, d(1)?))
                    }
                    "Left" => {
                        want(1)?;
                        Ok(Data::Left(d(0)?))
                    }
                    "Right" => {
                        want(1)?;
                        Ok(Data::Right(d(0)?))
                    }
                    "Some" => {
                        want(1)?;
                        Ok(Data::Some(d(0)?))
                    }
                    other => Err(SyntaxError::new(n.pos, "data constructor", format!("`{other}`"))),
                }
            }
        }
    }

    pub fn to_node(&self) -> Node {
        match self {
            Data::Int(i) => Node::int(i.clone()),
            Data::Str(s) => Node::string(s.clone()),
            Data::Unit => Node::prim("Unit", vec![]),
            Data::True => Node::prim("True", vec![]),
            Data::False => Node::prim("False", vec![]),
            Data::None => Node::prim("None", vec![]),
            Data::Pair(a, b) => Node::prim("Pair", vec![a.to_node(), b.to_node()]),
            Data::Elt(a, b) => Node::prim("Elt", vec![a.to_node(), b.to_node()]),
            Data::Left(a) => Node::prim("Left", vec![a.to_node()]),
            Data::Right(a) => Node::prim("Right", vec![a.to_node()]),
            Data::Some(a) => Node::prim("Some", vec![a.to_node()]),
            Data::Seq(items) => Node::seq(items.iter().map(Data::to_node).collect()),
        }
    }

    pub fn parse(src: &str) -> Result<Data, SyntaxError> {
        Data::from_node(&parse_expr(src)?)
    }
}

impl std::fmt::Display for Data {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_node().to_inline())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Cmp {
    const ALL: [Cmp; 6] = [Cmp::Eq, Cmp::Neq, Cmp::Lt, Cmp::Gt, Cmp::Le, Cmp::Ge];

    pub fn suffix(self) -> &'static str {
        match self {
            Cmp::Eq => "EQ",
            Cmp::Neq => "NEQ",
            Cmp::Lt => "LT",
            Cmp::Gt => "GT",
            Cmp::Le => "LE",
            Cmp::Ge => "GE",
        }
    }

    fn from_suffix(s: &str) -> Option<Cmp> {
        Cmp::ALL.into_iter().find(|c| c.suffix() == s)
    }

    fn instr(self) -> Instr {
        match self {
            Cmp::Eq => Instr::Eq,
            Cmp::Neq => Instr::Neq,
            Cmp::Lt => Instr::Lt,
            Cmp::Gt => Instr::Gt,
            Cmp::Le => Instr::Le,
            Cmp::Ge => Instr::Ge,
        }
    }
}

/// Derived instructions, removed by [`expand_macros`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Macro {
    Cmp(Cmp),
    If(Cmp, Vec<Instr>, Vec<Instr>),
    IfCmp(Cmp, Vec<Instr>, Vec<Instr>),
    Fail,
    Unpair,
    Assert,
    AssertCmp(Cmp),
    IfSome(Vec<Instr>, Vec<Instr>),
    /// An upper-case name the parser does not know; rejected at expansion.
    Unknown(String, Vec<Node>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Push(Ty, Data),
    Drop,
    Dup,
    Swap,
    Dip(Vec<Instr>),
    Pair,
    Car,
    Cdr,
    Unit,
    Some,
    None(Ty),
    Left(Ty),
    Right(Ty),
    Cons,
    Nil(Ty),
    EmptyMap(Ty, Ty),
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
    If(Vec<Instr>, Vec<Instr>),
    IfNone(Vec<Instr>, Vec<Instr>),
    IfLeft(Vec<Instr>, Vec<Instr>),
    And,
    Or,
    Not,
    Amount,
    Balance,
    Sender,
    Source,
    SelfContract,
    Now,
    Address,
    Contract(Ty),
    TransferTokens,
    ImplicitAccount,
    Failwith,
    Loop(Vec<Instr>),
    Seq(Vec<Instr>),
    Macro(Macro),
}

const NULLARY: &[(&str, Instr)] = &[
    ("DROP", Instr::Drop),
    ("DUP", Instr::Dup),
    ("SWAP", Instr::Swap),
    ("PAIR", Instr::Pair),
    ("CAR", Instr::Car),
    ("CDR", Instr::Cdr),
    ("UNIT", Instr::Unit),
    ("SOME", Instr::Some),
    ("CONS", Instr::Cons),
    ("GET", Instr::Get),
    ("UPDATE", Instr::Update),
    ("MEM", Instr::Mem),
    ("ADD", Instr::Add),
    ("SUB", Instr::Sub),
    ("MUL", Instr::Mul),
    ("COMPARE", Instr::Compare),
    ("EQ", Instr::Eq),
    ("NEQ", Instr::Neq),
    ("LT", Instr::Lt),
    ("GT", Instr::Gt),
    ("LE", Instr::Le),
    ("GE", Instr::Ge),
    ("AND", Instr::And),
    ("OR", Instr::Or),
    ("NOT", Instr::Not),
    ("AMOUNT", Instr::Amount),
    ("BALANCE", Instr::Balance),
    ("SENDER", Instr::Sender),
    ("SOURCE", Instr::Source),
    ("SELF", Instr::SelfContract),
    ("NOW", Instr::Now),
    ("ADDRESS", Instr::Address),
    ("TRANSFER_TOKENS", Instr::TransferTokens),
    ("IMPLICIT_ACCOUNT", Instr::ImplicitAccount),
    ("FAILWITH", Instr::Failwith),
];

/// Names of every core opcode, used by the binary codec's primitive table.
pub const CORE_OPCODES: &[&str] = &[
    "PUSH", "DROP", "DUP", "SWAP", "DIP", "PAIR", "CAR", "CDR", "UNIT", "SOME", "NONE", "LEFT", "RIGHT", "CONS", "NIL",
    "EMPTY_MAP", "GET", "UPDATE", "MEM", "ADD", "SUB", "MUL", "COMPARE", "EQ", "NEQ", "LT", "GT", "LE", "GE", "IF",
    "IF_NONE", "IF_LEFT", "AND", "OR", "NOT", "AMOUNT", "BALANCE", "SENDER", "SOURCE", "SELF", "NOW", "ADDRESS",
    "CONTRACT", "TRANSFER_TOKENS", "IMPLICIT_ACCOUNT", "FAILWITH", "LOOP",
];

impl Instr {
    pub fn from_node(n: &Node) -> Result<Instr, SyntaxError> {
        let (name, args) = match &n.kind {
            NodeKind::Seq(items) => return Ok(Instr::Seq(block_from_nodes(items)?)),
            NodeKind::Prim(name, args) => (name.as_str(), args.as_slice()),
            _ => return Err(SyntaxError::new(n.pos, "instruction", n.describe())),
        };
        let want = |k: usize| -> Result<(), SyntaxError> {
            if args.len() == k {
                Ok(())
            } else {
                Err(SyntaxError::new(
                    n.pos,
                    format!("{k} argument(s) for `{name}`"),
                    format!("{} argument(s)", args.len()),
                ))
            }
        };
        let ty = |i: usize| Ty::from_node(&args[i]);
        let block = |i: usize| -> Result<Vec<Instr>, SyntaxError> {
            match &args[i].kind {
                NodeKind::Seq(items) => block_from_nodes(items),
                _ => Err(SyntaxError::new(args[i].pos, "instruction sequence `{ ... }`", args[i].describe())),
            }
        };

        if let Some((_, i)) = NULLARY.iter().find(|(k, _)| *k == name) {
            want(0)?;
            return Ok(i.clone());
        }
        let instr = match name {
            "PUSH" => {
                want(2)?;
                Instr::Push(ty(0)?, Data::from_node(&args[1])?)
            }
            "NONE" | "LEFT" | "RIGHT" | "NIL" | "CONTRACT" => {
                want(1)?;
                let t = ty(0)?;
                match name {
                    "NONE" => Instr::None(t),
                    "LEFT" => Instr::Left(t),
                    "RIGHT" => Instr::Right(t),
                    "NIL" => Instr::Nil(t),
                    _ => Instr::Contract(t),
                }
            }
            "EMPTY_MAP" => {
                want(2)?;
                Instr::EmptyMap(ty(0)?, ty(1)?)
            }
            "DIP" | "LOOP" => {
                want(1)?;
                let b = block(0)?;
                if name == "DIP" {
                    Instr::Dip(b)
                } else {
                    Instr::Loop(b)
                }
            }
            "IF" | "IF_NONE" | "IF_LEFT" | "IF_SOME" => {
                want(2)?;
                let (a, b) = (block(0)?, block(1)?);
                match name {
                    "IF" => Instr::If(a, b),
                    "IF_NONE" => Instr::IfNone(a, b),
                    "IF_LEFT" => Instr::IfLeft(a, b),
                    _ => Instr::Macro(Macro::IfSome(a, b)),
                }
            }
            "FAIL" | "UNPAIR" | "ASSERT" => {
                want(0)?;
                Instr::Macro(match name {
                    "FAIL" => Macro::Fail,
                    "UNPAIR" => Macro::Unpair,
                    _ => Macro::Assert,
                })
            }
            _ => {
                if let Some(c) = name.strip_prefix("CMP").and_then(Cmp::from_suffix) {
                    want(0)?;
                    Instr::Macro(Macro::Cmp(c))
                } else if let Some(c) = name.strip_prefix("ASSERT_CMP").and_then(Cmp::from_suffix) {
                    want(0)?;
                    Instr::Macro(Macro::AssertCmp(c))
                } else if let Some(c) = name.strip_prefix("IFCMP").and_then(Cmp::from_suffix) {
                    want(2)?;
                    Instr::Macro(Macro::IfCmp(c, block(0)?, block(1)?))
                } else if let Some(c) = name.strip_prefix("IF").and_then(Cmp::from_suffix) {
                    want(2)?;
                    Instr::Macro(Macro::If(c, block(0)?, block(1)?))
                } else if name.chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                    Instr::Macro(Macro::Unknown(name.to_string(), args.to_vec()))
                } else {
                    return Err(SyntaxError::new(n.pos, "instruction", format!("`{name}`")));
                }
            }
        };
        Ok(instr)
    }

    pub fn name(&self) -> &str {
        match self {
            Instr::Push(..) => "PUSH",
            Instr::Dip(_) => "DIP",
            Instr::None(_) => "NONE",
            Instr::Left(_) => "LEFT",
            Instr::Right(_) => "RIGHT",
            Instr::Nil(_) => "NIL",
            Instr::EmptyMap(..) => "EMPTY_MAP",
            Instr::If(..) => "IF",
            Instr::IfNone(..) => "IF_NONE",
            Instr::IfLeft(..) => "IF_LEFT",
            Instr::Contract(_) => "CONTRACT",
            Instr::Loop(_) => "LOOP",
            Instr::Seq(_) => "{}",
            Instr::Macro(m) => match m {
                Macro::Fail => "FAIL",
                Macro::Unpair => "UNPAIR",
                Macro::Assert => "ASSERT",
                Macro::IfSome(..) => "IF_SOME",
                Macro::Unknown(n, _) => n,
                Macro::Cmp(_) => "CMP",
                Macro::If(..) => "IF",
                Macro::IfCmp(..) => "IFCMP",
                Macro::AssertCmp(_) => "ASSERT_CMP",
            },
            other => NULLARY
                .iter()
                .find(|(_, i)| i == other)
                .map(|(k, _)| *k)
                .expect("nullary instruction in table"),
        }
    }

    fn full_name(&self) -> String {
        match self {
            Instr::Macro(Macro::Cmp(c)) => format!("CMP{}", c.suffix()),
            Instr::Macro(Macro::If(c, ..)) => format!("IF{}", c.suffix()),
            Instr::Macro(Macro::IfCmp(c, ..)) => format!("IFCMP{}", c.suffix()),
            Instr::Macro(Macro::AssertCmp(c)) => format!("ASSERT_CMP{}", c.suffix()),
            other => other.name().to_string(),
        }
    }

    /// Block arguments, in order.
    pub fn blocks(&self) -> Vec<&[Instr]> {
        match self {
            Instr::Dip(b) | Instr::Loop(b) | Instr::Seq(b) => vec![b],
            Instr::If(a, b) | Instr::IfNone(a, b) | Instr::IfLeft(a, b) => vec![a, b],
            Instr::Macro(Macro::If(_, a, b) | Macro::IfCmp(_, a, b) | Macro::IfSome(a, b)) => vec![a, b],
            _ => vec![],
        }
    }

    /// Non-block arguments as nodes (types and constants).
    fn immediate_nodes(&self) -> Vec<Node> {
        match self {
            Instr::Push(t, d) => vec![t.to_node(), d.to_node()],
            Instr::None(t) | Instr::Left(t) | Instr::Right(t) | Instr::Nil(t) | Instr::Contract(t) => vec![t.to_node()],
            Instr::EmptyMap(k, v) => vec![k.to_node(), v.to_node()],
            Instr::Macro(Macro::Unknown(_, args)) => args.clone(),
            _ => vec![],
        }
    }

    pub fn is_core(&self) -> bool {
        !matches!(self, Instr::Macro(_)) && self.blocks().iter().all(|b| b.iter().all(Instr::is_core))
    }

    /// Counts this instruction and every nested one.
    pub fn node_count(&self) -> u64 {
        1 + self.blocks().iter().map(|b| block_node_count(b)).sum::<u64>()
    }

    pub fn to_node(&self) -> Node {
        if let Instr::Seq(b) = self {
            return Node::seq(b.iter().map(Instr::to_node).collect());
        }
        let mut args = self.immediate_nodes();
        for b in self.blocks() {
            args.push(Node::seq(b.iter().map(Instr::to_node).collect()));
        }
        Node::prim(self.full_name(), args)
    }
}

pub fn block_node_count(b: &[Instr]) -> u64 {
    b.iter().map(Instr::node_count).sum()
}

fn block_from_nodes(items: &[Node]) -> Result<Vec<Instr>, SyntaxError> {
    items.iter().map(Instr::from_node).collect()
}

/// A parsed contract: exactly one of each section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawProgram {
    pub parameter: Ty,
    pub storage: Ty,
    pub code: Vec<Instr>,
}

impl RawProgram {
    pub fn from_nodes(sections: &[Node]) -> Result<RawProgram, ParseError> {
        let mut parameter = None;
        let mut storage = None;
        let mut code = None;
        for s in sections {
            let (name, args) = match &s.kind {
                NodeKind::Prim(name, args) => (name.as_str(), args),
                _ => return Err(SyntaxError::new(s.pos, "`parameter`, `storage` or `code`", s.describe()).into()),
            };
            if args.len() != 1 {
                let found = if args.is_empty() { format!("`{name};`") } else { format!("{} arguments", args.len()) };
                return Err(SyntaxError::new(s.pos, format!("one argument for `{name}`"), found).into());
            }
            let slot_taken = match name {
                "parameter" => parameter.replace(Ty::from_node(&args[0])?).is_some(),
                "storage" => storage.replace(Ty::from_node(&args[0])?).is_some(),
                "code" => {
                    let body = match &args[0].kind {
                        NodeKind::Seq(items) => block_from_nodes(items)?,
                        _ => vec![Instr::from_node(&args[0])?],
                    };
                    code.replace(body).is_some()
                }
                other => {
                    return Err(SyntaxError::new(s.pos, "`parameter`, `storage` or `code`", format!("`{other}`")).into())
                }
            };
            if slot_taken {
                return Err(ParseError::DuplicateSection(name.to_string()));
            }
        }
        Ok(RawProgram {
            parameter: parameter.ok_or(ParseError::MissingSection("parameter"))?,
            storage: storage.ok_or(ParseError::MissingSection("storage"))?,
            code: code.ok_or(ParseError::MissingSection("code"))?,
        })
    }

    pub fn to_nodes(&self) -> Vec<Node> {
        vec![
            Node::prim("parameter", vec![self.parameter.to_node()]),
            Node::prim("storage", vec![self.storage.to_node()]),
            Node::prim("code", vec![Node::seq(self.code.iter().map(Instr::to_node).collect())]),
        ]
    }

    pub fn is_core(&self) -> bool {
        self.code.iter().all(Instr::is_core)
    }
}

pub fn parse_program(src: &str) -> Result<RawProgram, ParseError> {
    let sections = parse_toplevel(src)?;
    RawProgram::from_nodes(&sections)
}

/// Canonical text: one instruction per line, two-space indentation.
pub fn render_program(p: &RawProgram) -> String {
    let mut out = String::new();
    out.push_str(&format!("parameter {};\n", Node::to_inline_arg(&p.parameter.to_node())));
    out.push_str(&format!("storage {};\n", Node::to_inline_arg(&p.storage.to_node())));
    out.push_str("code ");
    render_block(&p.code, 0, &mut out);
    out.push('\n');
    out
}

impl Node {
    /// Inline form in argument position: parenthesized if it has arguments.
    fn to_inline_arg(n: &Node) -> String {
        match &n.kind {
            NodeKind::Prim(_, args) if !args.is_empty() => format!("({})", n.to_inline()),
            _ => n.to_inline(),
        }
    }
}

fn render_block(b: &[Instr], indent: usize, out: &mut String) {
    if b.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for (i, instr) in b.iter().enumerate() {
        push_indent(out, indent + 1);
        render_instr(instr, indent + 1, out);
        if i + 1 < b.len() {
            out.push(';');
        }
        out.push('\n');
    }
    push_indent(out, indent);
    out.push('}');
}

fn render_instr(i: &Instr, indent: usize, out: &mut String) {
    if let Instr::Seq(b) = i {
        render_block(b, indent, out);
        return;
    }
    out.push_str(&i.full_name());
    for n in i.immediate_nodes() {
        out.push(' ');
        out.push_str(&Node::to_inline_arg(&n));
    }
    for b in i.blocks() {
        out.push(' ');
        render_block(b, indent, out);
    }
}

fn push_indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn expand_block(b: &[Instr]) -> Result<Vec<Instr>, ParseError> {
    let mut out = Vec::with_capacity(b.len());
    for i in b {
        expand_into(i, &mut out)?;
    }
    Ok(out)
}

fn fail() -> Vec<Instr> {
    vec![Instr::Push(Ty::String, Data::Str("fail".into())), Instr::Failwith]
}

fn expand_into(i: &Instr, out: &mut Vec<Instr>) -> Result<(), ParseError> {
    match i {
        Instr::Macro(m) => match m {
            Macro::Cmp(c) => out.extend([Instr::Compare, c.instr()]),
            Macro::If(c, a, b) => out.extend([c.instr(), Instr::If(expand_block(a)?, expand_block(b)?)]),
            Macro::IfCmp(c, a, b) => {
                out.extend([Instr::Compare, c.instr(), Instr::If(expand_block(a)?, expand_block(b)?)])
            }
            Macro::Fail => out.extend(fail()),
            Macro::Unpair => out.extend([Instr::Dup, Instr::Car, Instr::Dip(vec![Instr::Cdr])]),
            Macro::Assert => out.push(Instr::If(vec![], fail())),
            Macro::AssertCmp(c) => out.extend([Instr::Compare, c.instr(), Instr::If(vec![], fail())]),
            Macro::IfSome(a, b) => out.push(Instr::IfNone(expand_block(b)?, expand_block(a)?)),
            Macro::Unknown(name, _) => return Err(ParseError::UnknownMacro(name.clone())),
        },
        Instr::Dip(b) => out.push(Instr::Dip(expand_block(b)?)),
        Instr::Loop(b) => out.push(Instr::Loop(expand_block(b)?)),
        Instr::Seq(b) => out.push(Instr::Seq(expand_block(b)?)),
        Instr::If(a, b) => out.push(Instr::If(expand_block(a)?, expand_block(b)?)),
        Instr::IfNone(a, b) => out.push(Instr::IfNone(expand_block(a)?, expand_block(b)?)),
        Instr::IfLeft(a, b) => out.push(Instr::IfLeft(expand_block(a)?, expand_block(b)?)),
        core => out.push(core.clone()),
    }
    Ok(())
}

/// Rewrites every macro into core instructions, splicing expansions into the
/// enclosing sequence.
pub fn expand_macros(p: &RawProgram) -> Result<RawProgram, ParseError> {
    Ok(RawProgram { parameter: p.parameter.clone(), storage: p.storage.clone(), code: expand_block(&p.code)? })
}

pub fn expand_instrs(b: &[Instr]) -> Result<Vec<Instr>, ParseError> {
    expand_block(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code_of(src: &str) -> Vec<Instr> {
        parse_program(&format!("parameter unit; storage unit; code {{ {src} }}")).unwrap().code
    }

    #[test]
    fn parses_vote_header() {
        let p = parse_program("parameter string; storage (map string int); code { CDR; NIL operation; PAIR }").unwrap();
        assert_eq!(p.parameter, Ty::String);
        assert_eq!(p.storage, Ty::map(Ty::String, Ty::Int));
        assert_eq!(p.code.len(), 3);
    }

    #[test]
    fn identity_contract_is_minimal_valid() {
        let p = parse_program("parameter unit; storage unit; code { CDR; NIL operation; PAIR }").unwrap();
        assert_eq!(p.code, vec![Instr::Cdr, Instr::Nil(Ty::Operation), Instr::Pair]);
    }

    #[test]
    fn section_without_argument_is_syntax_error() {
        match parse_program("parameter; storage unit; code {}") {
            Err(ParseError::Syntax(e)) => {
                assert_eq!((e.pos.line, e.pos.col), (1, 1));
                assert!(e.found.contains("parameter;"), "{e}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_missing_sections() {
        assert!(matches!(
            parse_program("parameter unit; parameter unit; storage unit; code {}"),
            Err(ParseError::DuplicateSection(s)) if s == "parameter"
        ));
        assert!(matches!(
            parse_program("parameter unit; storage unit"),
            Err(ParseError::MissingSection("code"))
        ));
    }

    #[test]
    fn ifcmpgt_fail_expansion() {
        let code = expand_instrs(&code_of("IFCMPGT { FAIL } {}")).unwrap();
        assert_eq!(
            code,
            vec![
                Instr::Compare,
                Instr::Gt,
                Instr::If(vec![Instr::Push(Ty::String, Data::Str("fail".into())), Instr::Failwith], vec![]),
            ]
        );
    }

    #[test]
    fn unpair_expansion() {
        let code = expand_instrs(&code_of("UNPAIR")).unwrap();
        assert_eq!(code, vec![Instr::Dup, Instr::Car, Instr::Dip(vec![Instr::Cdr])]);
    }

    #[test]
    fn core_program_is_fixpoint() {
        let p = parse_program("parameter unit; storage unit; code { CDR; NIL operation; PAIR }").unwrap();
        assert_eq!(expand_macros(&p).unwrap(), p);
    }

    #[test]
    fn unknown_macro_rejected_at_expansion() {
        let p = parse_program("parameter unit; storage unit; code { DUUUUP }").unwrap();
        assert!(matches!(expand_macros(&p), Err(ParseError::UnknownMacro(n)) if n == "DUUUUP"));
    }

    #[test]
    fn empty_code_renders_as_braces() {
        let p = RawProgram { parameter: Ty::Unit, storage: Ty::Unit, code: vec![] };
        let text = render_program(&p);
        assert!(text.ends_with("code {}\n"), "{text}");
        assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn render_nested_blocks() {
        let src = "parameter (or unit int); storage (option int); code { IF_SOME { DROP } { PUSH (option int) (Some 1) ; { DROP } } ; DIP {} }";
        let p = parse_program(src).unwrap();
        let text = render_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p);
        assert!(text.contains("  IF_SOME {\n    DROP\n  } {\n"), "{text}");
    }
}
