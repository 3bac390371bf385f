use std::fmt;

use crate::syntax::{Node, NodeKind, SyntaxError};

/// Michelson types supported by the subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Int,
    Nat,
    Mutez,
    String,
    Timestamp,
    Bool,
    Unit,
    Address,
    KeyHash,
    Operation,
    Pair(Box<Ty>, Box<Ty>),
    Or(Box<Ty>, Box<Ty>),
    Option(Box<Ty>),
    Map(Box<Ty>, Box<Ty>),
    List(Box<Ty>),
    Contract(Box<Ty>),
}

impl Ty {
    pub fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ty, b: Ty) -> Ty {
        Ty::Or(Box::new(a), Box::new(b))
    }

    pub fn option(a: Ty) -> Ty {
        Ty::Option(Box::new(a))
    }

    pub fn map(k: Ty, v: Ty) -> Ty {
        Ty::Map(Box::new(k), Box::new(v))
    }

    pub fn list(a: Ty) -> Ty {
        Ty::List(Box::new(a))
    }

    pub fn contract(a: Ty) -> Ty {
        Ty::Contract(Box::new(a))
    }

    /// Types usable as map keys and as COMPARE operands.
    pub fn is_comparable(&self) -> bool {
        matches!(
            self,
            Ty::Int | Ty::Nat | Ty::Mutez | Ty::String | Ty::Timestamp | Ty::Address | Ty::KeyHash | Ty::Bool
        )
    }

    pub fn contains_operation(&self) -> bool {
        match self {
            Ty::Operation => true,
            Ty::Pair(a, b) | Ty::Or(a, b) | Ty::Map(a, b) => a.contains_operation() || b.contains_operation(),
            Ty::Option(a) | Ty::List(a) => a.contains_operation(),
            // a contract handle never carries an operation value
            Ty::Contract(_) => false,
            _ => false,
        }
    }

    pub fn contains_contract(&self) -> bool {
        match self {
            Ty::Contract(_) => true,
            Ty::Pair(a, b) | Ty::Or(a, b) | Ty::Map(a, b) => a.contains_contract() || b.contains_contract(),
            Ty::Option(a) | Ty::List(a) => a.contains_contract(),
            _ => false,
        }
    }

    pub fn to_node(&self) -> Node {
        match self {
            Ty::Int => Node::prim("int", vec![]),
            Ty::Nat => Node::prim("nat", vec![]),
            Ty::Mutez => Node::prim("mutez", vec![]),
            Ty::String => Node::prim("string", vec![]),
            Ty::Timestamp => Node::prim("timestamp", vec![]),
            Ty::Bool => Node::prim("bool", vec![]),
            Ty::Unit => Node::prim("unit", vec![]),
            Ty::Address => Node::prim("address", vec![]),
            Ty::KeyHash => Node::prim("key_hash", vec![]),
            Ty::Operation => Node::prim("operation", vec![]),
            Ty::Pair(a, b) => Node::prim("pair", vec![a.to_node(), b.to_node()]),
            Ty::Or(a, b) => Node::prim("or", vec![a.to_node(), b.to_node()]),
            Ty::Option(a) => Node::prim("option", vec![a.to_node()]),
            Ty::Map(k, v) => Node::prim("map", vec![k.to_node(), v.to_node()]),
            Ty::List(a) => Node::prim("list", vec![a.to_node()]),
            Ty::Contract(a) => Node::prim("contract", vec![a.to_node()]),
        }
    }

    pub fn from_node(n: &Node) -> Result<Ty, SyntaxError> {
        let (name, args) = match &n.kind {
            NodeKind::Prim(name, args) => (name.as_str(), args.as_slice()),
            _ => return Err(SyntaxError::new(n.pos, "type", n.describe())),
        };
        let arity = |k: usize| -> Result<(), SyntaxError> {
            if args.len() == k {
                Ok(())
            } else {
                Err(SyntaxError::new(
                    n.pos,
                    format!("{k} type argument(s) for `{name}`"),
                    format!("{} argument(s)", args.len()),
                ))
            }
        };
        let ty = match name {
            "int" => Ty::Int,
            "nat" => Ty::Nat,
            "mutez" => Ty::Mutez,
            "string" => Ty::String,
            "timestamp" => Ty::Timestamp,
            "bool" => Ty::Bool,
            "unit" => Ty::Unit,
            "address" => Ty::Address,
            "key_hash" => Ty::KeyHash,
            "operation" => Ty::Operation,
            "pair" | "or" | "map" => {
                arity(2)?;
                let a = Ty::from_node(&args[0])?;
                let b = Ty::from_node(&args[1])?;
                return match name {
                    "pair" => Ok(Ty::pair(a, b)),
                    "or" => Ok(Ty::or(a, b)),
                    _ => {
                        if !a.is_comparable() {
                            return Err(SyntaxError::new(args[0].pos, "comparable map key type", a.to_string()));
                        }
                        Ok(Ty::map(a, b))
                    }
                };
            }
            "option" | "list" | "contract" => {
                arity(1)?;
                let a = Ty::from_node(&args[0])?;
                return Ok(match name {
                    "option" => Ty::option(a),
                    "list" => Ty::list(a),
                    _ => Ty::contract(a),
                });
            }
            other => return Err(SyntaxError::new(n.pos, "type", format!("`{other}`"))),
        };
        arity(0)?;
        Ok(ty)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_node().to_inline())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    #[test]
    fn map_key_must_be_comparable() {
        let n = parse_expr("map (list int) int").unwrap();
        assert!(Ty::from_node(&n).is_err());
        let n = parse_expr("map string int").unwrap();
        assert_eq!(Ty::from_node(&n).unwrap(), Ty::map(Ty::String, Ty::Int));
    }

    #[test]
    fn display_parenthesizes() {
        let t = Ty::pair(Ty::map(Ty::Timestamp, Ty::Int), Ty::Address);
        assert_eq!(t.to_string(), "pair (map timestamp int) address");
    }
}
