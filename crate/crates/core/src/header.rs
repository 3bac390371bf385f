//! Block headers, endorsements and blocks, with their forged forms.

use tzdesk_michelson::Address;

use crate::crypto::{hash, hash_parts, BlockHash, Hash, PublicKey, SecretKey, Signature, Watermark};
use crate::encoding::{write_address, Reader};
use crate::error::ProtocolError;
use crate::operation::Operation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub level: u64,
    pub predecessor: BlockHash,
    pub timestamp: i64,
    pub priority: u16,
    pub baker: Address,
    pub operations_hash: Hash,
    pub signature: Signature,
}

impl BlockHeader {
    pub fn unsigned_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(105);
        out.extend(self.level.to_be_bytes());
        out.extend(self.predecessor.0);
        out.extend(self.timestamp.to_be_bytes());
        out.extend(self.priority.to_be_bytes());
        write_address(&self.baker, &mut out);
        out.extend(self.operations_hash);
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.unsigned_bytes();
        out.extend(self.signature.0);
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<BlockHeader, ProtocolError> {
        Ok(BlockHeader {
            level: r.u64()?,
            predecessor: BlockHash(r.array()?),
            timestamp: r.i64()?,
            priority: r.u16()?,
            baker: r.address()?,
            operations_hash: r.array()?,
            signature: Signature(r.array()?),
        })
    }

    pub fn from_bytes(b: &[u8]) -> Result<BlockHeader, ProtocolError> {
        let mut r = Reader::new(b);
        let h = BlockHeader::read(&mut r)?;
        if !r.done() {
            return Err(ProtocolError::Malformed("trailing bytes after header".into()));
        }
        Ok(h)
    }

    pub fn hash(&self) -> BlockHash {
        BlockHash(hash(&self.to_bytes()))
    }

    pub fn sign(&mut self, sk: &SecretKey) {
        self.signature = sk.sign(Watermark::BlockHeader, &self.unsigned_bytes());
    }

    pub fn check_signature(&self, pk: &PublicKey) -> bool {
        pk.verify(Watermark::BlockHeader, &self.unsigned_bytes(), &self.signature)
    }
}

/// A delegate's vote for the block at `level`, cast with one of its slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endorsement {
    pub level: u64,
    pub slot: u16,
    pub block: BlockHash,
    pub delegate: Address,
    pub signature: Signature,
}

impl Endorsement {
    pub fn new(sk: &SecretKey, level: u64, slot: u16, block: BlockHash) -> Endorsement {
        let mut e = Endorsement { level, slot, block, delegate: sk.public_key().address(), signature: Signature::ANY };
        e.signature = sk.sign(Watermark::Endorsement, &e.unsigned_bytes());
        e
    }

    pub fn unsigned_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        out.extend(self.level.to_be_bytes());
        out.extend(self.slot.to_be_bytes());
        out.extend(self.block.0);
        write_address(&self.delegate, &mut out);
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.unsigned_bytes();
        out.extend(self.signature.0);
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Endorsement, ProtocolError> {
        Ok(Endorsement {
            level: r.u64()?,
            slot: r.u16()?,
            block: BlockHash(r.array()?),
            delegate: r.address()?,
            signature: Signature(r.array()?),
        })
    }

    pub fn hash(&self) -> Hash {
        hash(&self.to_bytes())
    }

    pub fn check_signature(&self, pk: &PublicKey) -> bool {
        pk.verify(Watermark::Endorsement, &self.unsigned_bytes(), &self.signature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub endorsements: Vec<Endorsement>,
    pub operations: Vec<Operation>,
}

impl Block {
    pub fn hash(&self) -> BlockHash {
        self.header.hash()
    }

    /// Commitment to the block body carried by the header.
    pub fn compute_operations_hash(endorsements: &[Endorsement], operations: &[Operation]) -> Hash {
        let mut parts: Vec<Hash> = endorsements.iter().map(Endorsement::hash).collect();
        parts.extend(operations.iter().map(|o| o.hash().0));
        let refs: Vec<&[u8]> = parts.iter().map(|h| &h[..]).collect();
        hash_parts(&refs)
    }

    /// Assembles and signs a block.
    pub fn forge(
        sk: &SecretKey,
        level: u64,
        predecessor: BlockHash,
        timestamp: i64,
        priority: u16,
        endorsements: Vec<Endorsement>,
        operations: Vec<Operation>,
    ) -> Block {
        let mut header = BlockHeader {
            level,
            predecessor,
            timestamp,
            priority,
            baker: sk.public_key().address(),
            operations_hash: Block::compute_operations_hash(&endorsements, &operations),
            signature: Signature::ANY,
        };
        header.sign(sk);
        Block { header, endorsements, operations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip_and_signature() {
        let sk = SecretKey::from_label("baker");
        let b = Block::forge(&sk, 3, BlockHash(hash(b"p")), 1_000, 1, vec![], vec![]);
        assert!(b.header.check_signature(&sk.public_key()));
        assert_eq!(BlockHeader::from_bytes(&b.header.to_bytes()).unwrap(), b.header);
        let mut tampered = b.header.clone();
        tampered.timestamp += 1;
        assert!(!tampered.check_signature(&sk.public_key()));
        assert_ne!(tampered.hash(), b.hash());
    }

    #[test]
    fn endorsement_signature() {
        let sk = SecretKey::from_label("e");
        let e = Endorsement::new(&sk, 4, 7, BlockHash(hash(b"x")));
        assert!(e.check_signature(&sk.public_key()));
        let bytes = e.to_bytes();
        let mut r = Reader::new(&bytes);
        assert_eq!(Endorsement::read(&mut r).unwrap(), e);
    }
}
