//! The client's wallet: `public_keys`, `secret_keys`, `public_key_hashes`
//! and `contracts`, each a JSON list of `{name, value}` records in the
//! client directory.

use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tzdesk_core::{PublicKey, SecretKey};
use tzdesk_michelson::Address;

const SECRET_PREFIX: &str = "unencrypted:";

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("alias `{0}` already exists")]
    DuplicateAlias(String),
    #[error("no key or contract named `{0}`")]
    UnknownAlias(String),
    #[error("no secret key for `{0}`")]
    NoSecretKey(String),
    #[error("wallet entry `{alias}` in {file}: {reason}")]
    Inconsistent { file: &'static str, alias: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Corrupt { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, Default)]
pub struct Wallet {
    /// `None` keeps everything in memory.
    dir: Option<PathBuf>,
    pub public_keys: Vec<Entry>,
    pub secret_keys: Vec<Entry>,
    pub public_key_hashes: Vec<Entry>,
    pub contracts: Vec<Entry>,
}

fn find<'a>(list: &'a [Entry], name: &str) -> Option<&'a str> {
    list.iter().find(|e| e.name == name).map(|e| e.value.as_str())
}

fn upsert(list: &mut Vec<Entry>, name: &str, value: String) {
    match list.iter_mut().find(|e| e.name == name) {
        Some(e) => e.value = value,
        None => list.push(Entry { name: name.to_string(), value }),
    }
}

fn load(dir: &Path, file: &str) -> Result<Vec<Entry>, WalletError> {
    let path = dir.join(file);
    match fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map_err(|source| WalletError::Corrupt { path, source }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(vec![]),
        Err(source) => Err(WalletError::Io { path, source }),
    }
}

impl Wallet {
    pub fn in_memory() -> Wallet {
        Wallet::default()
    }

    /// Reads the wallet files of `dir`; missing files are empty.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Wallet, WalletError> {
        let dir = dir.into();
        Ok(Wallet {
            public_keys: load(&dir, "public_keys")?,
            secret_keys: load(&dir, "secret_keys")?,
            public_key_hashes: load(&dir, "public_key_hashes")?,
            contracts: load(&dir, "contracts")?,
            dir: Some(dir),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Where later `save` calls write.
    pub fn set_dir(&mut self, dir: impl Into<PathBuf>) {
        self.dir = Some(dir.into());
    }

    pub fn save(&self) -> Result<(), WalletError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|source| WalletError::Io { path: dir.clone(), source })?;
        for (file, list) in [
            ("public_keys", &self.public_keys),
            ("secret_keys", &self.secret_keys),
            ("public_key_hashes", &self.public_key_hashes),
            ("contracts", &self.contracts),
        ] {
            let path = dir.join(file);
            let text = serde_json::to_string_pretty(list).expect("entries serialize");
            fs::write(&path, text + "\n").map_err(|source| WalletError::Io { path, source })?;
        }
        Ok(())
    }

    fn has_key(&self, alias: &str) -> bool {
        find(&self.public_key_hashes, alias).is_some()
    }

    /// Records `sk` under `alias` in the three key files.
    pub fn import_secret_key(&mut self, alias: &str, sk: &SecretKey, force: bool) -> Result<Address, WalletError> {
        if self.has_key(alias) && !force {
            return Err(WalletError::DuplicateAlias(alias.to_string()));
        }
        let pk = sk.public_key();
        upsert(&mut self.secret_keys, alias, format!("{SECRET_PREFIX}{sk}"));
        upsert(&mut self.public_keys, alias, pk.to_string());
        upsert(&mut self.public_key_hashes, alias, pk.address().to_string());
        Ok(pk.address())
    }

    pub fn gen_keys(&mut self, alias: &str, rng: &mut impl RngCore) -> Result<Address, WalletError> {
        if self.has_key(alias) {
            return Err(WalletError::DuplicateAlias(alias.to_string()));
        }
        self.import_secret_key(alias, &SecretKey::generate(rng), false)
    }

    pub fn add_contract(&mut self, alias: &str, addr: Address, force: bool) -> Result<(), WalletError> {
        if find(&self.contracts, alias).is_some() && !force {
            return Err(WalletError::DuplicateAlias(alias.to_string()));
        }
        upsert(&mut self.contracts, alias, addr.to_string());
        Ok(())
    }

    pub fn contract(&self, alias: &str) -> Option<Address> {
        find(&self.contracts, alias).and_then(|v| v.parse().ok())
    }

    /// A literal address, else a key alias, else a contract alias.
    pub fn resolve(&self, name: &str) -> Result<Address, WalletError> {
        if let Ok(a) = name.parse::<Address>() {
            return Ok(a);
        }
        find(&self.public_key_hashes, name)
            .or_else(|| find(&self.contracts, name))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| WalletError::UnknownAlias(name.to_string()))
    }

    /// Alias of a known address, for display.
    pub fn alias_of(&self, a: &Address) -> Option<&str> {
        let text = a.to_string();
        self.public_key_hashes.iter().chain(&self.contracts).find(|e| e.value == text).map(|e| e.name.as_str())
    }

    /// Secret key of an alias or of the address it names.
    pub fn secret_key(&self, name: &str) -> Result<SecretKey, WalletError> {
        let alias = match find(&self.secret_keys, name) {
            Some(_) => name.to_string(),
            None => {
                let a = self.resolve(name)?;
                self.alias_of(&a).ok_or_else(|| WalletError::NoSecretKey(name.to_string()))?.to_string()
            }
        };
        find(&self.secret_keys, &alias)
            .and_then(|v| v.strip_prefix(SECRET_PREFIX))
            .and_then(|v| v.parse().ok())
            .ok_or(WalletError::NoSecretKey(alias))
    }

    pub fn public_key(&self, name: &str) -> Result<PublicKey, WalletError> {
        find(&self.public_keys, name)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| WalletError::UnknownAlias(name.to_string()))
    }

    /// Every secret has a public key and hash under the same alias that it
    /// derives, and every alias is unique within its file.
    pub fn check_consistency(&self) -> Result<(), WalletError> {
        let bad = |file, alias: &str, reason: &str| WalletError::Inconsistent { file, alias: alias.to_string(), reason: reason.to_string() };
        for (file, list) in [
            ("public_keys", &self.public_keys),
            ("secret_keys", &self.secret_keys),
            ("public_key_hashes", &self.public_key_hashes),
            ("contracts", &self.contracts),
        ] {
            for (i, e) in list.iter().enumerate() {
                if list[..i].iter().any(|p| p.name == e.name) {
                    return Err(bad(file, &e.name, "duplicate alias"));
                }
            }
        }
        for e in &self.secret_keys {
            let sk: SecretKey = e
                .value
                .strip_prefix(SECRET_PREFIX)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("secret_keys", &e.name, "unreadable secret key"))?;
            let pk = sk.public_key();
            if find(&self.public_keys, &e.name) != Some(pk.to_string().as_str()) {
                return Err(bad("public_keys", &e.name, "does not match the secret key"));
            }
        }
        for e in &self.public_keys {
            let pk: PublicKey = e.value.parse().map_err(|_| bad("public_keys", &e.name, "unreadable public key"))?;
            if find(&self.public_key_hashes, &e.name) != Some(pk.address().to_string().as_str()) {
                return Err(bad("public_key_hashes", &e.name, "does not hash the public key"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gen_keys_fills_the_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = Wallet::open(dir.path()).unwrap();
        let bob = w.gen_keys("bob", &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        w.save().unwrap();
        for file in ["public_keys", "secret_keys", "public_key_hashes"] {
            let list: Vec<Entry> = serde_json::from_str(&fs::read_to_string(dir.path().join(file)).unwrap()).unwrap();
            assert_eq!(list.len(), 1);
            assert_eq!(list[0].name, "bob");
        }
        let back = Wallet::open(dir.path()).unwrap();
        assert_eq!(back.resolve("bob").unwrap(), bob);
        assert_eq!(back.secret_key("bob").unwrap().public_key().address(), bob);
        assert_eq!(back.secret_key(&bob.to_string()).unwrap().public_key().address(), bob);
        back.check_consistency().unwrap();
    }

    #[test]
    fn duplicate_and_unknown_aliases() {
        let mut w = Wallet::in_memory();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        w.gen_keys("bob", &mut rng).unwrap();
        assert!(matches!(w.gen_keys("bob", &mut rng), Err(WalletError::DuplicateAlias(_))));
        assert!(matches!(w.resolve("carol"), Err(WalletError::UnknownAlias(_))));
        let kt1 = Address::originated([7; 20]);
        w.add_contract("vote", kt1, false).unwrap();
        assert!(matches!(w.add_contract("vote", kt1, false), Err(WalletError::DuplicateAlias(_))));
        assert_eq!(w.resolve("vote").unwrap(), kt1);
        assert!(matches!(w.secret_key("vote"), Err(WalletError::NoSecretKey(_))));
    }

    #[test]
    fn tampered_files_are_inconsistent() {
        let mut w = Wallet::in_memory();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        w.gen_keys("a", &mut rng).unwrap();
        w.gen_keys("b", &mut rng).unwrap();
        w.check_consistency().unwrap();
        let mut t = w.clone();
        t.public_key_hashes[0].value = t.public_key_hashes[1].value.clone();
        assert!(matches!(t.check_consistency(), Err(WalletError::Inconsistent { file: "public_key_hashes", .. })));
        let mut t = w.clone();
        t.public_keys.swap(0, 1);
        t.public_keys[0].name = "a".into();
        t.public_keys[1].name = "b".into();
        assert!(t.check_consistency().is_err());
        let mut t = w;
        t.secret_keys.push(Entry { name: "a".into(), value: "unencrypted:x".into() });
        assert!(t.check_consistency().is_err());
    }
}
