//! Operation contents and their forged byte form:
//! `branch (32) ‖ contents ‖ signature (64)`.

use tzdesk_michelson::binary::{decode_node_at, encode_node};
use tzdesk_michelson::syntax::Node;
use tzdesk_michelson::Address;

use crate::crypto::{hash, hash_parts, BlockHash, OperationHash, ProtocolHash, PublicKey, SecretKey, Signature, Watermark};
use crate::encoding::{write_address, write_bytes, write_n, Reader};
use crate::error::ProtocolError;
use crate::header::{BlockHeader, Endorsement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManagerFields {
    pub source: Address,
    pub fee: u64,
    pub counter: u64,
    pub gas_limit: u64,
    pub storage_limit: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    /// Sequence of the `parameter`, `storage` and `code` sections.
    pub code: Node,
    pub storage: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    Yay,
    Nay,
    Pass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Reveal { m: ManagerFields, public_key: PublicKey },
    Transaction { m: ManagerFields, amount: u64, destination: Address, parameters: Option<Node> },
    Origination { m: ManagerFields, balance: u64, delegate: Option<Address>, script: Script },
    Delegation { m: ManagerFields, delegate: Option<Address> },
    Activation { pkh: Address, secret: [u8; 20], amount: u64 },
    Proposals { source: Address, period: u32, proposals: Vec<ProtocolHash> },
    Ballot { source: Address, period: u32, proposal: ProtocolHash, ballot: Vote },
    DoubleBaking { bh1: Box<BlockHeader>, bh2: Box<BlockHeader> },
    DoubleEndorsement { e1: Box<Endorsement>, e2: Box<Endorsement> },
}

const TAG_DOUBLE_ENDORSEMENT: u8 = 2;
const TAG_DOUBLE_BAKING: u8 = 3;
const TAG_ACTIVATION: u8 = 4;
const TAG_PROPOSALS: u8 = 5;
const TAG_BALLOT: u8 = 6;
const TAG_REVEAL: u8 = 7;
const TAG_TRANSACTION: u8 = 8;
const TAG_ORIGINATION: u8 = 9;
const TAG_DELEGATION: u8 = 10;

/// The secret a pre-allocated account must present to claim `amount`.
pub fn activation_secret(pkh: &Address, amount: u64) -> [u8; 20] {
    let h = hash_parts(&[b"activation", &pkh.to_bytes(), &amount.to_be_bytes()]);
    h[..20].try_into().expect("20 bytes")
}

impl Content {
    pub fn manager(&self) -> Option<&ManagerFields> {
        match self {
            Content::Reveal { m, .. }
            | Content::Transaction { m, .. }
            | Content::Origination { m, .. }
            | Content::Delegation { m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn manager_mut(&mut self) -> Option<&mut ManagerFields> {
        match self {
            Content::Reveal { m, .. }
            | Content::Transaction { m, .. }
            | Content::Origination { m, .. }
            | Content::Delegation { m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Content::Reveal { .. } => "reveal",
            Content::Transaction { .. } => "transaction",
            Content::Origination { .. } => "origination",
            Content::Delegation { .. } => "delegation",
            Content::Activation { .. } => "activate_account",
            Content::Proposals { .. } => "proposals",
            Content::Ballot { .. } => "ballot",
            Content::DoubleBaking { .. } => "double_baking_evidence",
            Content::DoubleEndorsement { .. } => "double_endorsement_evidence",
        }
    }

    /// Evidence with its two halves in canonical (hash) order.
    pub fn double_baking(a: BlockHeader, b: BlockHeader) -> Content {
        let (bh1, bh2) = if a.hash() <= b.hash() { (a, b) } else { (b, a) };
        Content::DoubleBaking { bh1: Box::new(bh1), bh2: Box::new(bh2) }
    }

    pub fn double_endorsement(a: Endorsement, b: Endorsement) -> Content {
        let (e1, e2) = if a.hash() <= b.hash() { (a, b) } else { (b, a) };
        Content::DoubleEndorsement { e1: Box::new(e1), e2: Box::new(e2) }
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        fn manager(tag: u8, m: &ManagerFields, out: &mut Vec<u8>) {
            out.push(tag);
            write_address(&m.source, out);
            write_n(m.fee, out);
            write_n(m.counter, out);
            write_n(m.gas_limit, out);
            write_n(m.storage_limit, out);
        }
        fn node(n: &Node) -> Vec<u8> {
            let mut b = Vec::new();
            encode_node(n, &mut b).expect("operation expressions use known primitives");
            b
        }
        match self {
            Content::Reveal { m, public_key } => {
                manager(TAG_REVEAL, m, out);
                out.push(0);
                out.extend(public_key.0);
            }
            Content::Transaction { m, amount, destination, parameters } => {
                manager(TAG_TRANSACTION, m, out);
                write_n(*amount, out);
                write_address(destination, out);
                match parameters {
                    None => out.push(0),
                    Some(p) => {
                        out.push(0xff);
                        write_bytes(&node(p), out);
                    }
                }
            }
            Content::Origination { m, balance, delegate, script } => {
                manager(TAG_ORIGINATION, m, out);
                write_n(*balance, out);
                match delegate {
                    None => out.push(0),
                    Some(d) => {
                        out.push(0xff);
                        write_address(d, out);
                    }
                }
                write_bytes(&node(&script.code), out);
                write_bytes(&node(&script.storage), out);
            }
            Content::Delegation { m, delegate } => {
                manager(TAG_DELEGATION, m, out);
                match delegate {
                    None => out.push(0),
                    Some(d) => {
                        out.push(0xff);
                        write_address(d, out);
                    }
                }
            }
            Content::Activation { pkh, secret, amount } => {
                out.push(TAG_ACTIVATION);
                write_address(pkh, out);
                out.extend(secret);
                write_n(*amount, out);
            }
            Content::Proposals { source, period, proposals } => {
                out.push(TAG_PROPOSALS);
                write_address(source, out);
                out.extend(period.to_be_bytes());
                out.extend((proposals.len() as u32).to_be_bytes());
                for p in proposals {
                    out.extend(p.0);
                }
            }
            Content::Ballot { source, period, proposal, ballot } => {
                out.push(TAG_BALLOT);
                write_address(source, out);
                out.extend(period.to_be_bytes());
                out.extend(proposal.0);
                out.push(*ballot as u8);
            }
            Content::DoubleBaking { bh1, bh2 } => {
                out.push(TAG_DOUBLE_BAKING);
                write_bytes(&bh1.to_bytes(), out);
                write_bytes(&bh2.to_bytes(), out);
            }
            Content::DoubleEndorsement { e1, e2 } => {
                out.push(TAG_DOUBLE_ENDORSEMENT);
                write_bytes(&e1.to_bytes(), out);
                write_bytes(&e2.to_bytes(), out);
            }
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Content, ProtocolError> {
        fn manager(r: &mut Reader<'_>) -> Result<ManagerFields, ProtocolError> {
            Ok(ManagerFields { source: r.address()?, fee: r.n()?, counter: r.n()?, gas_limit: r.n()?, storage_limit: r.n()? })
        }
        fn node(b: &[u8]) -> Result<Node, ProtocolError> {
            let mut at = 0;
            let n = decode_node_at(b, &mut at).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
            if at != b.len() {
                return Err(ProtocolError::Malformed("trailing expression bytes".into()));
            }
            Ok(n)
        }
        fn option_address(r: &mut Reader<'_>) -> Result<Option<Address>, ProtocolError> {
            match r.u8()? {
                0 => Ok(None),
                0xff => Ok(Some(r.address()?)),
                _ => Err(ProtocolError::Malformed("bad option tag".into())),
            }
        }
        let tag = r.u8()?;
        Ok(match tag {
            TAG_REVEAL => {
                let m = manager(r)?;
                if r.u8()? != 0 {
                    return Err(ProtocolError::Malformed("unknown key kind".into()));
                }
                Content::Reveal { m, public_key: PublicKey(r.array()?) }
            }
            TAG_TRANSACTION => {
                let m = manager(r)?;
                let amount = r.n()?;
                let destination = r.address()?;
                let parameters = match r.u8()? {
                    0 => None,
                    0xff => Some(node(r.bytes()?)?),
                    _ => return Err(ProtocolError::Malformed("bad option tag".into())),
                };
                Content::Transaction { m, amount, destination, parameters }
            }
            TAG_ORIGINATION => {
                let m = manager(r)?;
                let balance = r.n()?;
                let delegate = option_address(r)?;
                let code = node(r.bytes()?)?;
                let storage = node(r.bytes()?)?;
                Content::Origination { m, balance, delegate, script: Script { code, storage } }
            }
            TAG_DELEGATION => {
                let m = manager(r)?;
                Content::Delegation { m, delegate: option_address(r)? }
            }
            TAG_ACTIVATION => Content::Activation { pkh: r.address()?, secret: r.array()?, amount: r.n()? },
            TAG_PROPOSALS => {
                let source = r.address()?;
                let period = r.u32()?;
                let n = r.u32()? as usize;
                if n > 64 {
                    return Err(ProtocolError::Malformed("too many proposals".into()));
                }
                let proposals = (0..n).map(|_| r.array().map(ProtocolHash)).collect::<Result<_, _>>()?;
                Content::Proposals { source, period, proposals }
            }
            TAG_BALLOT => {
                let source = r.address()?;
                let period = r.u32()?;
                let proposal = ProtocolHash(r.array()?);
                let ballot = match r.u8()? {
                    0 => Vote::Yay,
                    1 => Vote::Nay,
                    2 => Vote::Pass,
                    _ => return Err(ProtocolError::Malformed("bad ballot".into())),
                };
                Content::Ballot { source, period, proposal, ballot }
            }
            TAG_DOUBLE_BAKING => {
                let bh1 = BlockHeader::from_bytes(r.bytes()?)?;
                let bh2 = BlockHeader::from_bytes(r.bytes()?)?;
                Content::DoubleBaking { bh1: Box::new(bh1), bh2: Box::new(bh2) }
            }
            TAG_DOUBLE_ENDORSEMENT => {
                let mut r1 = Reader::new(r.bytes()?);
                let e1 = Endorsement::read(&mut r1)?;
                let mut r2 = Reader::new(r.bytes()?);
                let e2 = Endorsement::read(&mut r2)?;
                if !r1.done() || !r2.done() {
                    return Err(ProtocolError::Malformed("trailing endorsement bytes".into()));
                }
                Content::DoubleEndorsement { e1: Box::new(e1), e2: Box::new(e2) }
            }
            t => return Err(ProtocolError::Malformed(format!("unknown content tag {t}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub branch: BlockHash,
    pub contents: Vec<Content>,
    pub signature: Signature,
}

impl Operation {
    /// Bytes covered by the signature.
    pub fn forge_unsigned(branch: &BlockHash, contents: &[Content]) -> Vec<u8> {
        let mut out = branch.0.to_vec();
        for c in contents {
            c.write(&mut out);
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Operation::forge_unsigned(&self.branch, &self.contents);
        out.extend(self.signature.0);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Operation, ProtocolError> {
        if b.len() < 32 + 64 {
            return Err(ProtocolError::Malformed("operation too short".into()));
        }
        let (body, sig) = b.split_at(b.len() - 64);
        let mut r = Reader::new(body);
        let branch = BlockHash(r.array()?);
        let mut contents = Vec::new();
        while !r.done() {
            contents.push(Content::read(&mut r)?);
        }
        if contents.is_empty() {
            return Err(ProtocolError::EmptyOperation);
        }
        Ok(Operation { branch, contents, signature: Signature(sig.try_into().expect("64 bytes")) })
    }

    pub fn hash(&self) -> OperationHash {
        OperationHash(hash(&self.to_bytes()))
    }

    pub fn sign(branch: BlockHash, contents: Vec<Content>, sk: &SecretKey) -> Operation {
        let signature = sk.sign(Watermark::Operation, &Operation::forge_unsigned(&branch, &contents));
        Operation { branch, contents, signature }
    }

    /// An operation whose contents need no signature.
    pub fn unsigned(branch: BlockHash, contents: Vec<Content>) -> Operation {
        Operation { branch, contents, signature: Signature::ANY }
    }

    pub fn check_signature(&self, pk: &PublicKey) -> bool {
        pk.verify(Watermark::Operation, &Operation::forge_unsigned(&self.branch, &self.contents), &self.signature)
    }

    pub fn size(&self) -> usize {
        self.to_bytes().len()
    }

    pub fn total_fee(&self) -> u64 {
        self.contents.iter().filter_map(Content::manager).map(|m| m.fee).sum()
    }

    /// `100 + size + ceil(gas_limit / 10)` per manager content, with the
    /// forged size counted once for the whole operation.
    pub fn minimal_fee(&self) -> u64 {
        let per_content: u64 = self.contents.iter().filter_map(Content::manager).map(|m| 100 + m.gas_limit.div_ceil(10)).sum();
        per_content + self.size() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_transfer() -> Operation {
        let sk = SecretKey::from_label("sender");
        let m = ManagerFields { source: sk.public_key().address(), fee: 1269, counter: 1, gas_limit: 10200, storage_limit: 0 };
        let dest = SecretKey::from_label("dest").public_key().address();
        Operation::sign(
            BlockHash(hash(b"head")),
            vec![Content::Transaction { m, amount: 1_000_000, destination: dest, parameters: None }],
            &sk,
        )
    }

    #[test]
    fn transfer_forges_to_149_bytes() {
        let op = sample_transfer();
        assert_eq!(op.size(), 149);
        assert_eq!(op.minimal_fee(), 100 + 149 + 1020);
    }

    #[test]
    fn forge_round_trip_every_kind() {
        let sk = SecretKey::from_label("k");
        let me = sk.public_key().address();
        let m = ManagerFields { source: me, fee: 10, counter: 2, gas_limit: 300, storage_limit: 4 };
        let code = Node::seq(tzdesk_michelson::parse_program("parameter unit; storage unit; code { CDR ; NIL operation ; PAIR }").unwrap().to_nodes());
        let bh = crate::header::Block::forge(&sk, 2, BlockHash(hash(b"a")), 5, 0, vec![], vec![]).header;
        let bh2 = crate::header::Block::forge(&sk, 2, BlockHash(hash(b"b")), 5, 0, vec![], vec![]).header;
        let e1 = Endorsement::new(&sk, 1, 0, BlockHash(hash(b"a")));
        let e2 = Endorsement::new(&sk, 1, 0, BlockHash(hash(b"b")));
        let contents = vec![
            Content::Reveal { m: m.clone(), public_key: sk.public_key() },
            Content::Transaction { m: m.clone(), amount: 5, destination: me, parameters: Some(Node::prim("Unit", vec![])) },
            Content::Origination {
                m: m.clone(),
                balance: 7,
                delegate: Some(me),
                script: Script { code, storage: Node::prim("Unit", vec![]) },
            },
            Content::Delegation { m, delegate: None },
            Content::Activation { pkh: me, secret: activation_secret(&me, 9), amount: 9 },
            Content::Proposals { source: me, period: 3, proposals: vec![ProtocolHash(hash(b"p"))] },
            Content::Ballot { source: me, period: 3, proposal: ProtocolHash(hash(b"p")), ballot: Vote::Nay },
            Content::double_baking(bh, bh2),
            Content::double_endorsement(e1, e2),
        ];
        let op = Operation::sign(BlockHash(hash(b"h")), contents, &sk);
        let back = Operation::from_bytes(&op.to_bytes()).unwrap();
        assert_eq!(back, op);
        assert!(back.check_signature(&sk.public_key()));
    }

    #[test]
    fn truncated_bytes_rejected() {
        let b = sample_transfer().to_bytes();
        for cut in [1, 2, 20] {
            let mut short = b.clone();
            let end = b.len() - 64;
            short.drain(end - cut..end);
            assert!(Operation::from_bytes(&short).is_err());
        }
    }
}
