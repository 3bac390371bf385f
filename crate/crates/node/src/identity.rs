//! Node identity: a key pair plus a proof-of-work stamp, `H(pk ‖ nonce)`
//! with at least `difficulty` leading zero bits.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tzdesk_core::crypto::hash_parts;
use tzdesk_core::{PublicKey, SecretKey};

pub const DEFAULT_DIFFICULTY: u32 = 8;
pub const MAX_DIFFICULTY: u32 = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("difficulty {0} exceeds the maximum of {MAX_DIFFICULTY}")]
    TooHard(u32),
    #[error("proof of work stamp does not meet difficulty {0}")]
    BadStamp(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeIdentity {
    pub peer_id: String,
    pub public_key: PublicKey,
    pub secret_key: SecretKey,
    #[serde(with = "hex_nonce")]
    pub proof_of_work_stamp: u64,
}

mod hex_nonce {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(n.to_be_bytes()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        let b = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let b: [u8; 8] = b.try_into().map_err(|_| serde::de::Error::custom("stamp must be 8 bytes"))?;
        Ok(u64::from_be_bytes(b))
    }
}

pub fn leading_zero_bits(h: &[u8]) -> u32 {
    let mut n = 0;
    for b in h {
        if *b == 0 {
            n += 8;
        } else {
            return n + b.leading_zeros();
        }
    }
    n
}

pub fn stamp_bits(pk: &PublicKey, nonce: u64) -> u32 {
    leading_zero_bits(&hash_parts(&[&pk.0, &nonce.to_be_bytes()]))
}

impl NodeIdentity {
    pub fn verify(&self, difficulty: u32) -> Result<(), IdentityError> {
        if stamp_bits(&self.public_key, self.proof_of_work_stamp) >= difficulty {
            Ok(())
        } else {
            Err(IdentityError::BadStamp(difficulty))
        }
    }
}

/// Fresh key pair and the first nonce meeting `difficulty`, with the number
/// of hashes tried.
pub fn generate_identity(rng: &mut impl RngCore, difficulty: u32) -> Result<(NodeIdentity, u64), IdentityError> {
    if difficulty > MAX_DIFFICULTY {
        return Err(IdentityError::TooHard(difficulty));
    }
    let sk = SecretKey::generate(rng);
    let pk = sk.public_key();
    let nonce = (0..).find(|n| stamp_bits(&pk, *n) >= difficulty).expect("a stamp exists");
    let id = NodeIdentity { peer_id: format!("id{}", &hex::encode(&pk.address().hash)[..16]), public_key: pk, secret_key: sk, proof_of_work_stamp: nonce };
    Ok((id, nonce + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_bits() {
        assert_eq!(leading_zero_bits(&[0, 0x80]), 8);
        assert_eq!(leading_zero_bits(&[0x01]), 7);
        assert_eq!(leading_zero_bits(&[0, 0]), 16);
    }

    #[test]
    fn difficulty_zero_takes_the_first_nonce() {
        let (id, tries) = generate_identity(&mut ChaCha8Rng::seed_from_u64(1), 0).unwrap();
        assert_eq!((id.proof_of_work_stamp, tries), (0, 1));
        id.verify(0).unwrap();
    }

    #[test]
    fn stamp_binds_the_key() {
        let (mut id, _) = generate_identity(&mut ChaCha8Rng::seed_from_u64(2), 12).unwrap();
        id.verify(12).unwrap();
        id.public_key.0[0] ^= 1;
        assert_eq!(id.verify(12), Err(IdentityError::BadStamp(12)));
        assert_eq!(generate_identity(&mut ChaCha8Rng::seed_from_u64(2), 25).unwrap_err(), IdentityError::TooHard(25));
    }

    #[test]
    fn json_round_trip() {
        let (id, _) = generate_identity(&mut ChaCha8Rng::seed_from_u64(3), 4).unwrap();
        let s = serde_json::to_string(&id).unwrap();
        assert_eq!(serde_json::from_str::<NodeIdentity>(&s).unwrap(), id);
    }
}
