//! Hashing, ed25519 keys and signatures with their textual forms.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tzdesk_michelson::Address;

pub type Hash = [u8; 32];

pub fn hash(data: &[u8]) -> Hash {
    Sha256::digest(data).into()
}

pub fn hash_parts(parts: &[&[u8]]) -> Hash {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Signing domains, prepended to the signed bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Watermark {
    BlockHeader = 1,
    Endorsement = 2,
    Operation = 3,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {what} `{text}`")]
pub struct KeyParseError {
    pub what: &'static str,
    pub text: String,
}

fn b58_decode<const N: usize>(s: &str, prefix: &str, what: &'static str) -> Result<[u8; N], KeyParseError> {
    let err = || KeyParseError { what, text: s.to_string() };
    let rest = s.strip_prefix(prefix).ok_or_else(err)?;
    let bytes = bs58::decode(rest).with_check(None).into_vec().map_err(|_| err())?;
    bytes.try_into().map_err(|_| err())
}

fn b58_encode(prefix: &str, bytes: &[u8]) -> String {
    format!("{prefix}{}", bs58::encode(bytes).with_check().into_string())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey(pub [u8; 32]);

impl PublicKey {
    /// The implicit (`tz1`) address of this key.
    pub fn address(&self) -> Address {
        let h = hash(&self.0);
        let mut a = [0u8; 20];
        a.copy_from_slice(&h[..20]);
        Address::implicit(a)
    }

    pub fn verify(&self, watermark: Watermark, msg: &[u8], sig: &Signature) -> bool {
        let Ok(vk) = VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&sig.0);
        let mut data = Vec::with_capacity(msg.len() + 1);
        data.push(watermark as u8);
        data.extend_from_slice(msg);
        vk.verify_strict(&data, &sig).is_ok()
    }
}

/// A 32-byte ed25519 seed.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(pub [u8; 32]);

impl SecretKey {
    pub fn public_key(&self) -> PublicKey {
        PublicKey(SigningKey::from_bytes(&self.0).verifying_key().to_bytes())
    }

    pub fn sign(&self, watermark: Watermark, msg: &[u8]) -> Signature {
        let mut data = Vec::with_capacity(msg.len() + 1);
        data.push(watermark as u8);
        data.extend_from_slice(msg);
        Signature(SigningKey::from_bytes(&self.0).sign(&data).to_bytes())
    }

    pub fn generate(rng: &mut impl rand::RngCore) -> SecretKey {
        let mut seed = [0; 32];
        rng.fill_bytes(&mut seed);
        SecretKey(seed)
    }

    /// Deterministic key derived from a label, for bootstrap accounts and tests.
    pub fn from_label(label: &str) -> SecretKey {
        SecretKey(hash_parts(&[b"tzdesk key", label.as_bytes()]))
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature(pub [u8; 64]);

impl Signature {
    /// Placeholder accepted by simulation in place of a real signature.
    pub const ANY: Signature = Signature([0; 64]);

    pub fn is_any(&self) -> bool {
        *self == Signature::ANY
    }
}

macro_rules! text_form {
    ($ty:ident, $n:expr, $prefix:expr, $what:expr) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&b58_encode($prefix, &self.0))
            }
        }

        impl FromStr for $ty {
            type Err = KeyParseError;

            fn from_str(s: &str) -> Result<Self, KeyParseError> {
                b58_decode::<$n>(s, $prefix, $what).map($ty)
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

text_form!(PublicKey, 32, "edpk", "public key");
text_form!(SecretKey, 32, "edsk", "secret key");

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&b58_encode("edsig", &self.0))
    }
}

impl FromStr for Signature {
    type Err = KeyParseError;

    fn from_str(s: &str) -> Result<Self, KeyParseError> {
        if s == "ANY_SIGNATURE" {
            return Ok(Signature::ANY);
        }
        b58_decode::<64>(s, "edsig", "signature").map(Signature)
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}..)", hex::encode(&self.0[..4]))
    }
}

/// 32-byte hashes rendered as `<prefix>:<hex>`.
macro_rules! prefixed_hash {
    ($ty:ident, $prefix:expr) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $ty(pub Hash);

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}:{}", $prefix, hex::encode(self.0))
            }
        }

        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}:{}..", $prefix, hex::encode(&self.0[..4]))
            }
        }

        impl FromStr for $ty {
            type Err = KeyParseError;

            fn from_str(s: &str) -> Result<Self, KeyParseError> {
                let err = || KeyParseError { what: stringify!($ty), text: s.to_string() };
                let rest = s.strip_prefix(concat!($prefix, ":")).ok_or_else(err)?;
                let bytes = hex::decode(rest).map_err(|_| err())?;
                Ok($ty(bytes.try_into().map_err(|_| err())?))
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

prefixed_hash!(BlockHash, "B");
prefixed_hash!(OperationHash, "op");
prefixed_hash!(ProtocolHash, "P");

/// Four-byte chain identifier, rendered `Net:<hex>`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ChainId(pub [u8; 4]);

impl fmt::Display for ChainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Net:{}", hex::encode(self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_and_verify() {
        let sk = SecretKey::from_label("alice");
        let pk = sk.public_key();
        let sig = sk.sign(Watermark::Operation, b"hello");
        assert!(pk.verify(Watermark::Operation, b"hello", &sig));
        assert!(!pk.verify(Watermark::Operation, b"hellp", &sig));
        assert!(!pk.verify(Watermark::BlockHeader, b"hello", &sig));
        assert!(!pk.verify(Watermark::Operation, b"hello", &Signature::ANY));
    }

    #[test]
    fn text_round_trips() {
        let sk = SecretKey::from_label("bob");
        let pk = sk.public_key();
        let sig = sk.sign(Watermark::Operation, b"x");
        assert!(pk.to_string().starts_with("edpk"));
        assert_eq!(pk.to_string().parse::<PublicKey>().unwrap(), pk);
        assert_eq!(sk.to_string().parse::<SecretKey>().unwrap(), sk);
        assert_eq!(sig.to_string().parse::<Signature>().unwrap(), sig);
        assert_eq!("ANY_SIGNATURE".parse::<Signature>().unwrap(), Signature::ANY);
        let b = BlockHash(hash(b"b"));
        assert_eq!(b.to_string().parse::<BlockHash>().unwrap(), b);
        assert!(pk.address().to_string().starts_with("tz1"));
    }
}
