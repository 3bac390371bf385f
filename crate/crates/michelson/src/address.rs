use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AddrKind {
    /// `tz1`: hash of a public key.
    Implicit,
    /// `KT1`: created by origination.
    Originated,
}

/// A 20-byte account hash tagged with its kind.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address {
    pub kind: AddrKind,
    pub hash: [u8; 20],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid address `{0}`")]
pub struct AddressError(pub String);

impl Address {
    pub fn implicit(hash: [u8; 20]) -> Address {
        Address { kind: AddrKind::Implicit, hash }
    }

    pub fn originated(hash: [u8; 20]) -> Address {
        Address { kind: AddrKind::Originated, hash }
    }

    pub fn is_implicit(&self) -> bool {
        self.kind == AddrKind::Implicit
    }

    fn prefix(&self) -> &'static str {
        match self.kind {
            AddrKind::Implicit => "tz1",
            AddrKind::Originated => "KT1",
        }
    }

    /// Kind byte followed by the hash.
    pub fn to_bytes(&self) -> [u8; 21] {
        let mut out = [0u8; 21];
        out[0] = match self.kind {
            AddrKind::Implicit => 0,
            AddrKind::Originated => 1,
        };
        out[1..].copy_from_slice(&self.hash);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Option<Address> {
        if b.len() != 21 {
            return None;
        }
        let kind = match b[0] {
            0 => AddrKind::Implicit,
            1 => AddrKind::Originated,
            _ => return None,
        };
        let mut hash = [0u8; 20];
        hash.copy_from_slice(&b[1..]);
        Some(Address { kind, hash })
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.prefix(), bs58::encode(self.hash).with_check().into_string())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Address {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Address, AddressError> {
        let err = || AddressError(s.to_string());
        let (kind, rest) = if let Some(r) = s.strip_prefix("tz1") {
            (AddrKind::Implicit, r)
        } else if let Some(r) = s.strip_prefix("KT1") {
            (AddrKind::Originated, r)
        } else {
            return Err(err());
        };
        let bytes = bs58::decode(rest).with_check(None).into_vec().map_err(|_| err())?;
        let hash: [u8; 20] = bytes.try_into().map_err(|_| err())?;
        Ok(Address { kind, hash })
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Address, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for kind in [AddrKind::Implicit, AddrKind::Originated] {
            let a = Address { kind, hash: [7; 20] };
            let s = a.to_string();
            assert!(s.starts_with(if kind == AddrKind::Implicit { "tz1" } else { "KT1" }));
            assert_eq!(s.parse::<Address>().unwrap(), a);
        }
    }

    #[test]
    fn checksum_detects_typos() {
        let s = Address::implicit([1; 20]).to_string();
        let mut chars: Vec<char> = s.chars().collect();
        let last = chars.len() - 1;
        chars[last] = if chars[last] == 'a' { 'b' } else { 'a' };
        let bad: String = chars.into_iter().collect();
        assert!(bad.parse::<Address>().is_err());
        assert!("tz1_XXXX".parse::<Address>().is_err());
    }
}
