//! Versioned key-value ledger. Cloning is cheap (persistent map), so every
//! block application works on its own copy and forks share structure.

use std::collections::BTreeMap;
use std::sync::Arc;

use im::OrdMap;
use tzdesk_michelson::{Address, TypedProgram};

use crate::constants::Constants;
use crate::crypto::{hash, Hash, PublicKey};
use crate::error::ProtocolError;

#[derive(Clone, Default)]
pub struct Context {
    kv: OrdMap<String, Vec<u8>>,
    /// Typechecked scripts of originated contracts, derived from the
    /// `code` entries and excluded from the hash.
    scripts: im::HashMap<Address, Arc<TypedProgram>>,
}

impl std::fmt::Debug for Context {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Context({} entries, {})", self.kv.len(), hex::encode(&self.context_hash()[..6]))
    }
}

fn key(path: &[&str]) -> String {
    path.join("/")
}

fn read_u64(b: &[u8]) -> u64 {
    u64::from_be_bytes(b.try_into().expect("u64 entries are 8 bytes"))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Frozen {
    pub deposits: u64,
    pub rewards: u64,
    pub fees: u64,
}

impl Frozen {
    pub fn total(&self) -> u64 {
        self.deposits + self.rewards + self.fees
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrozenKind {
    Deposits,
    Rewards,
    Fees,
}

impl FrozenKind {
    fn name(self) -> &'static str {
        match self {
            FrozenKind::Deposits => "deposits",
            FrozenKind::Rewards => "rewards",
            FrozenKind::Fees => "fees",
        }
    }
}

impl Context {
    pub fn get(&self, path: &[&str]) -> Option<&[u8]> {
        self.kv.get(&key(path)).map(Vec::as_slice)
    }

    pub fn set(&mut self, path: &[&str], value: Vec<u8>) {
        self.kv.insert(key(path), value);
    }

    pub fn del(&mut self, path: &[&str]) {
        self.kv.remove(&key(path));
    }

    pub fn contains(&self, path: &[&str]) -> bool {
        self.kv.contains_key(&key(path))
    }

    pub fn get_u64(&self, path: &[&str]) -> u64 {
        self.get(path).map(read_u64).unwrap_or(0)
    }

    pub fn set_u64(&mut self, path: &[&str], v: u64) {
        self.set(path, v.to_be_bytes().to_vec());
    }

    pub fn get_json<T: serde::de::DeserializeOwned>(&self, path: &[&str]) -> Option<T> {
        self.get(path).map(|b| serde_json::from_slice(b).expect("context JSON entries are well formed"))
    }

    pub fn set_json<T: serde::Serialize>(&mut self, path: &[&str], v: &T) {
        self.set(path, serde_json::to_vec(v).expect("serializable"));
    }

    /// Entries under `prefix/`, with keys relative to it.
    pub fn list(&self, prefix: &[&str]) -> Vec<(String, Vec<u8>)> {
        let p = format!("{}/", key(prefix));
        self.kv
            .range(p.clone()..)
            .take_while(|(k, _)| k.starts_with(&p))
            .map(|(k, v)| (k[p.len()..].to_string(), v.clone()))
            .collect()
    }

    pub fn del_prefix(&mut self, prefix: &[&str]) {
        let p = format!("{}/", key(prefix));
        let keys: Vec<String> = self.kv.range(p.clone()..).take_while(|(k, _)| k.starts_with(&p)).map(|(k, _)| k.clone()).collect();
        for k in keys {
            self.kv.remove(&k);
        }
    }

    pub fn len(&self) -> usize {
        self.kv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kv.is_empty()
    }

    /// Digest of every entry in key order.
    pub fn context_hash(&self) -> Hash {
        let mut buf = Vec::new();
        for (k, v) in self.kv.iter() {
            buf.extend((k.len() as u32).to_be_bytes());
            buf.extend(k.as_bytes());
            buf.extend((v.len() as u32).to_be_bytes());
            buf.extend(v);
        }
        hash(&buf)
    }

    pub fn script(&self, a: &Address) -> Option<Arc<TypedProgram>> {
        self.scripts.get(a).cloned()
    }

    pub fn set_script(&mut self, a: Address, p: Arc<TypedProgram>) {
        self.scripts.insert(a, p);
    }

    // Ledger views.

    pub fn constants(&self) -> Constants {
        self.get_json(&["constants"]).expect("constants are set at genesis")
    }

    pub fn set_constants(&mut self, c: &Constants) {
        self.set_json(&["constants"], c);
    }

    pub fn exists(&self, a: &Address) -> bool {
        self.contains(&["contracts", &a.to_string(), "balance"])
    }

    pub fn balance(&self, a: &Address) -> u64 {
        self.get_u64(&["contracts", &a.to_string(), "balance"])
    }

    pub fn counter(&self, a: &Address) -> u64 {
        self.get_u64(&["contracts", &a.to_string(), "counter"])
    }

    pub fn set_counter(&mut self, a: &Address, c: u64) {
        self.set_u64(&["contracts", &a.to_string(), "counter"], c);
    }

    pub fn manager_key(&self, a: &Address) -> Option<PublicKey> {
        self.get(&["contracts", &a.to_string(), "manager_key"]).map(|b| PublicKey(b.try_into().expect("32-byte key")))
    }

    pub fn set_manager_key(&mut self, a: &Address, pk: &PublicKey) {
        self.set(&["contracts", &a.to_string(), "manager_key"], pk.0.to_vec());
    }

    pub fn delegate_of(&self, a: &Address) -> Option<Address> {
        self.get(&["contracts", &a.to_string(), "delegate"]).map(|b| Address::from_bytes(b).expect("stored address"))
    }

    pub fn is_delegate(&self, d: &Address) -> bool {
        self.contains(&["delegates", &d.to_string()])
    }

    /// Registered delegates in address order.
    pub fn delegates(&self) -> Vec<Address> {
        let mut v: Vec<Address> = self.list(&["delegates"]).into_iter().map(|(k, _)| k.parse().expect("stored address")).collect();
        v.sort();
        v
    }

    pub fn staking_balance(&self, d: &Address) -> u64 {
        self.get_u64(&["staking", &d.to_string()])
    }

    pub fn rolls_of(&self, d: &Address) -> Result<u64, ProtocolError> {
        if !self.is_delegate(d) {
            return Err(ProtocolError::UnknownDelegate(*d));
        }
        Ok(self.staking_balance(d) / self.constants().tokens_per_roll)
    }

    fn adjust_staking(&mut self, d: &Address, delta: i128) {
        let k = ["staking", &d.to_string()];
        let v = self.get_u64(&k) as i128 + delta;
        self.set_u64(&k, u64::try_from(v).expect("staking balance stays non-negative"));
    }

    fn adjust_delegated(&mut self, a: &Address, delta: i128) {
        if let Some(d) = self.delegate_of(a) {
            self.adjust_staking(&d, delta);
        }
    }

    /// Adds to a balance, creating the account if needed.
    pub fn credit(&mut self, a: &Address, amount: u64) -> Result<(), ProtocolError> {
        let b = self.balance(a).checked_add(amount).ok_or(ProtocolError::MutezOverflow)?;
        self.set_u64(&["contracts", &a.to_string(), "balance"], b);
        self.adjust_delegated(a, amount as i128);
        Ok(())
    }

    pub fn debit(&mut self, a: &Address, amount: u64) -> Result<(), ProtocolError> {
        let balance = self.balance(a);
        if balance < amount {
            return Err(ProtocolError::BalanceTooLow { contract: *a, balance, amount });
        }
        self.set_u64(&["contracts", &a.to_string(), "balance"], balance - amount);
        self.adjust_delegated(a, -(amount as i128));
        Ok(())
    }

    pub fn transfer(&mut self, from: &Address, to: &Address, amount: u64) -> Result<(), ProtocolError> {
        self.debit(from, amount)?;
        self.credit(to, amount)
    }

    /// Sets or clears the delegate of `a`, moving its balance between
    /// staking balances. Delegating to oneself registers as a delegate.
    pub fn set_delegate(&mut self, a: &Address, d: Option<Address>) -> Result<(), ProtocolError> {
        if self.is_delegate(a) {
            if d == Some(*a) {
                return Ok(());
            }
            return Err(ProtocolError::DelegateLocked(*a));
        }
        if let Some(d) = d {
            if d == *a && a.is_implicit() {
                self.set(&["delegates", &a.to_string()], vec![1]);
                self.set_u64(&["staking", &a.to_string()], 0);
            } else if !self.is_delegate(&d) {
                return Err(ProtocolError::UnknownDelegate(d));
            }
        }
        let bal = self.balance(a) as i128;
        self.adjust_delegated(a, -bal);
        match d {
            Some(d) => self.set(&["contracts", &a.to_string(), "delegate"], d.to_bytes().to_vec()),
            None => self.del(&["contracts", &a.to_string(), "delegate"]),
        }
        self.adjust_delegated(a, bal);
        Ok(())
    }

    // Frozen balances, per delegate and cycle.

    pub fn frozen(&self, d: &Address, cycle: u64) -> Frozen {
        let (ds, cs) = (d.to_string(), cycle.to_string());
        Frozen {
            deposits: self.get_u64(&["frozen", &ds, &cs, "deposits"]),
            rewards: self.get_u64(&["frozen", &ds, &cs, "rewards"]),
            fees: self.get_u64(&["frozen", &ds, &cs, "fees"]),
        }
    }

    /// Every frozen entry of `d`, by cycle.
    pub fn frozen_cycles(&self, d: &Address) -> BTreeMap<u64, Frozen> {
        let mut out = BTreeMap::new();
        for (k, _) in self.list(&["frozen", &d.to_string()]) {
            let c: u64 = k.split('/').next().and_then(|c| c.parse().ok()).expect("cycle key");
            out.insert(c, self.frozen(d, c));
        }
        out
    }

    pub fn total_frozen(&self, d: &Address) -> u64 {
        self.frozen_cycles(d).values().map(Frozen::total).sum()
    }

    fn add_frozen(&mut self, d: &Address, cycle: u64, kind: FrozenKind, amount: u64) {
        let k = ["frozen", &d.to_string(), &cycle.to_string(), kind.name()];
        let v = self.get_u64(&k) + amount;
        self.set_u64(&k, v);
    }

    /// Moves a security deposit from the spendable balance to the frozen one.
    pub fn freeze_deposit(&mut self, d: &Address, cycle: u64, amount: u64) -> Result<(), ProtocolError> {
        self.debit(d, amount)?;
        self.add_frozen(d, cycle, FrozenKind::Deposits, amount);
        self.adjust_staking(d, amount as i128);
        Ok(())
    }

    /// Mints a frozen reward.
    pub fn reward(&mut self, d: &Address, cycle: u64, amount: u64) {
        self.add_frozen(d, cycle, FrozenKind::Rewards, amount);
        self.adjust_staking(d, amount as i128);
        self.add_supply("minted", amount);
    }

    /// Fees already taken from senders (held in the block pot) become frozen.
    pub fn freeze_fees(&mut self, d: &Address, cycle: u64, amount: u64) {
        self.add_frozen(d, cycle, FrozenKind::Fees, amount);
        self.adjust_staking(d, amount as i128);
    }

    pub fn unfreeze(&mut self, d: &Address, cycle: u64) -> Result<u64, ProtocolError> {
        let total = self.frozen(d, cycle).total();
        self.del_prefix(&["frozen", &d.to_string(), &cycle.to_string()]);
        self.adjust_staking(d, -(total as i128));
        self.credit(d, total)?;
        Ok(total)
    }

    /// Burns everything still frozen for `d`. Returns the amount.
    pub fn burn_all_frozen(&mut self, d: &Address) -> u64 {
        let total = self.total_frozen(d);
        self.del_prefix(&["frozen", &d.to_string()]);
        self.adjust_staking(d, -(total as i128));
        self.add_supply("burned", total);
        total
    }

    // Supply.

    pub fn supply(&self, which: &str) -> u64 {
        self.get_u64(&["supply", which])
    }

    pub fn add_supply(&mut self, which: &str, amount: u64) {
        let v = self.supply(which) + amount;
        self.set_u64(&["supply", which], v);
    }

    pub fn mint(&mut self, a: &Address, amount: u64) -> Result<(), ProtocolError> {
        self.credit(a, amount)?;
        self.add_supply("minted", amount);
        Ok(())
    }

    pub fn burn(&mut self, a: &Address, amount: u64) -> Result<(), ProtocolError> {
        self.debit(a, amount)?;
        self.add_supply("burned", amount);
        Ok(())
    }

    pub fn pending_fees(&self) -> u64 {
        self.get_u64(&["block", "pending_fees"])
    }

    pub fn pay_fee(&mut self, a: &Address, fee: u64) -> Result<(), ProtocolError> {
        self.debit(a, fee)?;
        let v = self.pending_fees() + fee;
        self.set_u64(&["block", "pending_fees"], v);
        Ok(())
    }

    pub fn take_pending_fees(&mut self) -> u64 {
        let v = self.pending_fees();
        self.del(&["block", "pending_fees"]);
        v
    }

    pub fn total_balances(&self) -> u128 {
        self.list(&["contracts"])
            .iter()
            .filter(|(k, _)| k.ends_with("/balance"))
            .map(|(_, v)| read_u64(v) as u128)
            .sum()
    }

    pub fn all_frozen(&self) -> u128 {
        self.list(&["frozen"]).iter().map(|(_, v)| read_u64(v) as u128).sum()
    }

    /// Supply invariant: `initial + minted - burned` equals balances plus
    /// frozen funds plus fees collected but not yet assigned.
    pub fn check_conservation(&self) -> Result<(), String> {
        let expected = self.supply("initial") as u128 + self.supply("minted") as u128 - self.supply("burned") as u128;
        let held = self.total_balances() + self.all_frozen() + self.pending_fees() as u128;
        if expected == held {
            Ok(())
        } else {
            Err(format!("supply {expected} != held {held}"))
        }
    }

    /// Recomputes every staking balance from scratch and compares it with
    /// the incrementally maintained one.
    pub fn check_staking(&self) -> Result<(), String> {
        let mut expect: BTreeMap<Address, u64> = self.delegates().into_iter().map(|d| (d, 0)).collect();
        for (k, v) in self.list(&["contracts"]) {
            let Some(a) = k.strip_suffix("/balance") else { continue };
            let a: Address = a.parse().expect("stored address");
            if let Some(d) = self.delegate_of(&a) {
                *expect.entry(d).or_default() += read_u64(&v);
            }
        }
        for d in self.delegates() {
            *expect.entry(d).or_default() += self.total_frozen(&d);
        }
        for (d, v) in expect {
            let got = self.staking_balance(&d);
            if got != v {
                return Err(format!("staking balance of {d}: stored {got}, recomputed {v}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        let mut c = Context::default();
        c.set_constants(&Constants::desk());
        c
    }

    fn addr(i: u8) -> Address {
        Address::implicit([i; 20])
    }

    #[test]
    fn get_set_del() {
        let mut c = ctx();
        c.set(&["a", "b"], vec![1]);
        assert_eq!(c.get(&["a", "b"]), Some(&[1u8][..]));
        let h = c.context_hash();
        let snapshot = c.clone();
        c.del(&["a", "b"]);
        assert_eq!(c.get(&["a", "b"]), None);
        assert_ne!(c.context_hash(), h);
        assert_eq!(snapshot.context_hash(), h);
    }

    #[test]
    fn staking_follows_balances() {
        let mut c = ctx();
        let (d, a) = (addr(1), addr(2));
        c.credit(&d, 20_000_000_000).unwrap();
        c.credit(&a, 5_000_000_000).unwrap();
        c.set_supply_initial_for_test();
        c.set_delegate(&d, Some(d)).unwrap();
        assert_eq!(c.staking_balance(&d), 20_000_000_000);
        c.set_delegate(&a, Some(d)).unwrap();
        assert_eq!(c.rolls_of(&d).unwrap(), 2);
        c.freeze_deposit(&d, 0, 256_000_000).unwrap();
        c.reward(&d, 0, 16_000_000);
        assert_eq!(c.staking_balance(&d), 25_016_000_000);
        c.transfer(&a, &addr(3), 1_000).unwrap();
        c.check_staking().unwrap();
        c.check_conservation().unwrap();
        assert_eq!(c.unfreeze(&d, 0).unwrap(), 272_000_000);
        c.check_staking().unwrap();
        c.freeze_deposit(&d, 1, 1_000).unwrap();
        assert_eq!(c.burn_all_frozen(&d), 1_000);
        c.check_staking().unwrap();
        c.check_conservation().unwrap();
        assert!(matches!(c.rolls_of(&a), Err(ProtocolError::UnknownDelegate(_))));
        assert!(matches!(c.set_delegate(&addr(3), Some(a)), Err(ProtocolError::UnknownDelegate(_))));
    }

    impl Context {
        fn set_supply_initial_for_test(&mut self) {
            let t = self.total_balances() as u64;
            self.set_u64(&["supply", "initial"], t);
        }
    }

    #[test]
    fn debit_checks_balance() {
        let mut c = ctx();
        c.credit(&addr(1), 5).unwrap();
        assert!(matches!(c.debit(&addr(1), 6), Err(ProtocolError::BalanceTooLow { balance: 5, amount: 6, .. })));
    }
}
