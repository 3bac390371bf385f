//! Generic expression tree shared by the text parser, the binary codec and
//! the JSON form: integers, strings, primitive applications and sequences.

use std::fmt::Write as _;

use num_bigint::BigInt;
use serde_json::{json, Value as Json};

use super::lexer::{tokenize, Pos, Tok, Token};
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Int(BigInt),
    Str(String),
    Prim(String, Vec<Node>),
    Seq(Vec<Node>),
}

/// Equality ignores source positions.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub pos: Pos,
}

impl PartialEq for Node {
    fn eq(&self, other: &Node) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Node {}

impl Node {
    pub fn int(i: impl Into<BigInt>) -> Node {
        Node { kind: NodeKind::Int(i.into()), pos: Pos::default() }
    }

    pub fn string(s: impl Into<String>) -> Node {
        Node { kind: NodeKind::Str(s.into()), pos: Pos::default() }
    }

    pub fn prim(name: impl Into<String>, args: Vec<Node>) -> Node {
        Node { kind: NodeKind::Prim(name.into(), args), pos: Pos::default() }
    }

    pub fn seq(items: Vec<Node>) -> Node {
        Node { kind: NodeKind::Seq(items), pos: Pos::default() }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            NodeKind::Int(i) => format!("integer {i}"),
            NodeKind::Str(s) => format!("string {s:?}"),
            NodeKind::Prim(p, _) => format!("`{p}`"),
            NodeKind::Seq(_) => "sequence".to_string(),
        }
    }

    /// Renders on one line, parenthesizing nested applications.
    pub fn to_inline(&self) -> String {
        let mut s = String::new();
        self.write_inline(&mut s, false);
        s
    }

    fn write_inline(&self, out: &mut String, nested: bool) {
        match &self.kind {
            NodeKind::Int(i) => {
                let _ = write!(out, "{i}");
            }
            NodeKind::Str(s) => out.push_str(&quote(s)),
            NodeKind::Prim(p, args) if args.is_empty() => out.push_str(p),
            NodeKind::Prim(p, args) => {
                if nested {
                    out.push('(');
                }
                out.push_str(p);
                for a in args {
                    out.push(' ');
                    a.write_inline(out, true);
                }
                if nested {
                    out.push(')');
                }
            }
            NodeKind::Seq(items) if items.is_empty() => out.push_str("{}"),
            NodeKind::Seq(items) => {
                out.push_str("{ ");
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" ; ");
                    }
                    item.write_inline(out, false);
                }
                out.push_str(" }");
            }
        }
    }

    pub fn to_json(&self) -> Json {
        match &self.kind {
            NodeKind::Int(i) => json!({ "int": i.to_string() }),
            NodeKind::Str(s) => json!({ "string": s }),
            NodeKind::Prim(p, args) if args.is_empty() => json!({ "prim": p }),
            NodeKind::Prim(p, args) => {
                json!({ "prim": p, "args": args.iter().map(Node::to_json).collect::<Vec<_>>() })
            }
            NodeKind::Seq(items) => Json::Array(items.iter().map(Node::to_json).collect()),
        }
    }

    pub fn from_json(j: &Json) -> Result<Node, String> {
        match j {
            Json::Array(items) => Ok(Node::seq(items.iter().map(Node::from_json).collect::<Result<_, _>>()?)),
            Json::Object(o) => {
                if let Some(i) = o.get("int") {
                    let s = i.as_str().ok_or("`int` must be a decimal string")?;
                    let n: BigInt = s.parse().map_err(|_| format!("bad integer {s:?}"))?;
                    Ok(Node::int(n))
                } else if let Some(s) = o.get("string") {
                    Ok(Node::string(s.as_str().ok_or("`string` must be a string")?))
                } else if let Some(p) = o.get("prim") {
                    let name = p.as_str().ok_or("`prim` must be a string")?;
                    let args = match o.get("args") {
                        None => Vec::new(),
                        Some(Json::Array(a)) => a.iter().map(Node::from_json).collect::<Result<_, _>>()?,
                        Some(_) => return Err("`args` must be an array".into()),
                    };
                    Ok(Node::prim(name, args))
                } else {
                    Err("expected one of `int`, `string`, `prim`".into())
                }
            }
            other => Err(format!("unexpected JSON {other}")),
        }
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let t = self.peek();
        SyntaxError::new(t.pos, expected, t.tok.to_string())
    }

    fn at_terminator(&self) -> bool {
        matches!(self.peek().tok, Tok::Semi | Tok::RBrace | Tok::RParen | Tok::Eof)
    }

    /// expr := IDENT arg* | arg
    fn expr(&mut self) -> Result<Node, SyntaxError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                self.next();
                let mut args = Vec::new();
                while !self.at_terminator() {
                    args.push(self.arg()?);
                }
                Ok(Node { kind: NodeKind::Prim(name, args), pos: t.pos })
            }
            _ => {
                let n = self.arg()?;
                if !self.at_terminator() {
                    return Err(self.error("`;`, `}` or `)`"));
                }
                Ok(n)
            }
        }
    }

    fn arg(&mut self) -> Result<Node, SyntaxError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(name) => {
                self.next();
                Ok(Node { kind: NodeKind::Prim(name, Vec::new()), pos: t.pos })
            }
            Tok::Int(i) => {
                self.next();
                Ok(Node { kind: NodeKind::Int(i), pos: t.pos })
            }
            Tok::Str(s) => {
                self.next();
                Ok(Node { kind: NodeKind::Str(s), pos: t.pos })
            }
            Tok::LBrace => self.seq(),
            Tok::LParen => {
                self.next();
                let inner = self.expr()?;
                match self.next().tok {
                    Tok::RParen => Ok(inner),
                    _ => Err(SyntaxError::new(self.toks[self.at.saturating_sub(1)].pos, "`)`", t.tok.to_string())),
                }
            }
            _ => Err(self.error("identifier, literal, `{` or `(`")),
        }
    }

    fn seq(&mut self) -> Result<Node, SyntaxError> {
        let open = self.next();
        debug_assert_eq!(open.tok, Tok::LBrace);
        let mut items = Vec::new();
        loop {
            if matches!(self.peek().tok, Tok::RBrace) {
                self.next();
                break;
            }
            items.push(self.expr()?);
            match self.peek().tok {
                Tok::Semi => {
                    self.next();
                }
                Tok::RBrace => {}
                _ => return Err(self.error("`;` or `}`")),
            }
        }
        Ok(Node { kind: NodeKind::Seq(items), pos: open.pos })
    }
}

/// Parses `;`-separated top-level expressions (program sections). A single
/// enclosing `{ ... }` is also accepted.
pub fn parse_toplevel(src: &str) -> Result<Vec<Node>, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0 };
    if matches!(p.peek().tok, Tok::LBrace) {
        let n = p.seq()?;
        if !matches!(p.peek().tok, Tok::Eof) {
            return Err(p.error("end of input"));
        }
        return match n.kind {
            NodeKind::Seq(items) => Ok(items),
            _ => unreachable!(),
        };
    }
    let mut items = Vec::new();
    while !matches!(p.peek().tok, Tok::Eof) {
        items.push(p.expr()?);
        match p.peek().tok {
            Tok::Semi => {
                p.next();
            }
            Tok::Eof => {}
            _ => return Err(p.error("`;`")),
        }
    }
    Ok(items)
}

/// Parses a single expression (a data literal or a type).
pub fn parse_expr(src: &str) -> Result<Node, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0 };
    if matches!(p.peek().tok, Tok::Eof) {
        return Err(p.error("expression"));
    }
    let n = p.expr()?;
    if !matches!(p.peek().tok, Tok::Eof) {
        return Err(p.error("end of input"));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_applications() {
        let n = parse_expr("Pair (Pair \"a\" 1) { Elt 1 2 ; Elt 3 4 }").unwrap();
        assert_eq!(n.to_inline(), "Pair (Pair \"a\" 1) { Elt 1 2 ; Elt 3 4 }");
    }

    #[test]
    fn comments_are_skipped() {
        let items = parse_toplevel("parameter unit; # the parameter\nstorage unit;").unwrap();
        assert_eq!(items.len(), 2);
    }

    #[test]
    fn json_round_trip() {
        let n = parse_expr("Right (Pair \"2019-05-07 23:22:25+00:00\" 15)").unwrap();
        let back = Node::from_json(&n.to_json()).unwrap();
        assert_eq!(back.to_inline(), n.to_inline());
    }

    #[test]
    fn unterminated_string() {
        let e = parse_expr("\"abc").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 1 });
    }
}
