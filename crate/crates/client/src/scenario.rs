//! The vote and rain-insurance walkthroughs, replayed on a fresh
//! in-process chain with seeded keys. Each step is echoed as the command a
//! user would type, followed by its output.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;
use tzdesk_core::block::bootstrap_keys;
use tzdesk_core::{Constants, MUTEZ_PER_TEZ};
use tzdesk_michelson::contracts::{INSURANCE, ORACLE, VOTE};
use tzdesk_michelson::Address;
use tzdesk_node::{FaucetFile, NodeService};

use crate::client::{Client, Inclusion, SubmitOptions, Submitted};
use crate::error::{ClientError, Result};
use crate::receipt::{describe, internal_transfers, statuses, total_fee, InternalTransfer};
use crate::script::{expr, origination_script};
use crate::tez::{format_tez, short_tez};
use crate::transport::InProcess;
use crate::wallet::Wallet;

pub const BALLOT_INIT: &str = "{ Elt \"Sierra\" 0 ; Elt \"Summit\" 0 ; Elt \"Sunway\" 0 ; Elt \"Tianhe-2A\" 0 }";
pub const BALLOT_FINAL: &str = "{ Elt \"Sierra\" 0 ; Elt \"Summit\" 1 ; Elt \"Sunway\" 0 ; Elt \"Tianhe-2A\" 0 }";
pub const INSURED_DATE: &str = "2019-05-07 23:22:25+00:00";
pub const RAIN_THRESHOLD: i64 = 10;
const FAUCET_AMOUNT: u64 = 10_000 * MUTEZ_PER_TEZ;

pub struct Session {
    pub client: Client<InProcess>,
    pub transcript: Vec<String>,
    rng: ChaCha8Rng,
}

fn check<T: PartialEq + std::fmt::Debug>(what: &str, expected: T, found: T) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(ClientError::AssertionFailure { what: what.into(), expected: format!("{expected:?}"), found: format!("{found:?}") })
    }
}

impl Session {
    /// A fresh five-delegate chain with `bootstrap1` imported.
    pub fn new(seed: u64) -> Result<Session> {
        let node = Arc::new(NodeService::new(Constants::mainnet()));
        let client = Client::new(InProcess::new(node), Wallet::in_memory());
        let mut s = Session { client, transcript: vec![], rng: ChaCha8Rng::seed_from_u64(seed) };
        let sk = bootstrap_keys(1).remove(0);
        s.cmd(format!("import secret key bootstrap1 unencrypted:{sk}"));
        let a = s.client.wallet.import_secret_key("bootstrap1", &sk, false)?;
        s.out(format!("Imported bootstrap1 ({a})"));
        Ok(s)
    }

    pub fn node(&self) -> Arc<NodeService> {
        self.client.transport.node.clone()
    }

    fn cmd(&mut self, c: impl AsRef<str>) {
        if !self.transcript.is_empty() {
            self.transcript.push(String::new());
        }
        self.transcript.push(format!("$ tzdesk-client {}", c.as_ref()));
    }

    fn out(&mut self, s: impl Into<String>) {
        self.transcript.push(s.into());
    }

    pub fn text(&self) -> String {
        self.transcript.join("\n") + "\n"
    }

    fn gen_keys(&mut self, alias: &str) -> Result<Address> {
        self.cmd(format!("gen keys {alias}"));
        let a = self.client.wallet.gen_keys(alias, &mut self.rng)?;
        self.out(format!("{alias}: {a}"));
        Ok(a)
    }

    fn include(&mut self, s: &Submitted) -> Result<Inclusion> {
        let inc = self.client.wait_for(&s.hash.to_string(), 0)?;
        let lines = describe(&inc.receipt, &self.client.wallet);
        self.transcript.extend(lines);
        self.out(format!("Included in block {} at level {}", inc.block, inc.level));
        Ok(inc)
    }

    fn activate(&mut self, alias: &str) -> Result<Address> {
        let faucet = FaucetFile::generate(&mut self.rng, FAUCET_AMOUNT);
        let file = format!("{}.json", faucet.pkh);
        self.cmd(format!("activate account {alias} with {file}"));
        let hash = self.client.activate(alias, &faucet)?;
        let inc = self.client.wait_for(&hash.to_string(), 0)?;
        let lines = describe(&inc.receipt, &self.client.wallet);
        self.transcript.extend(lines);
        self.out(format!("Account {alias} ({}) activated at level {}", faucet.pkh, inc.level));
        Ok(faucet.pkh)
    }

    pub fn balance(&mut self, alias: &str) -> Result<u64> {
        self.cmd(format!("get balance for {alias}"));
        let b = self.client.balance(alias)?;
        self.out(format!("{} tez", format_tez(b)));
        Ok(b)
    }

    fn transfer(&mut self, amount: &str, from: &str, to: &str, arg: Option<&str>, opts: &SubmitOptions) -> Result<Inclusion> {
        let mut cmd = format!("transfer {amount} from {from} to {to}");
        if let Some(fee) = opts.fee {
            cmd.push_str(&format!(" --fee {}", short_tez(fee)));
        }
        if let Some(a) = arg {
            cmd.push_str(&format!(" --arg '{a}'"));
        }
        if opts.burn_cap > 0 {
            cmd.push_str(&format!(" --burn-cap {}", short_tez(opts.burn_cap)));
        }
        if opts.force {
            cmd.push_str(" --force");
        }
        self.cmd(cmd);
        let mutez = crate::tez::parse_tez(amount).ok_or_else(|| ClientError::BadAmount(amount.into()))?;
        let parameters = arg.map(|a| expr(a, "the argument")).transpose()?;
        let s = self.client.transfer(mutez, from, to, parameters, opts)?;
        self.include(&s)
    }

    fn reveal(&mut self, alias: &str) -> Result<Inclusion> {
        self.cmd(format!("reveal key for {alias}"));
        let s = self.client.reveal(alias, &SubmitOptions::default())?;
        self.include(&s)
    }

    fn originate(&mut self, name: &str, src: &str, amount: &str, file: &str, code: &str, init: &str) -> Result<Address> {
        self.cmd(format!(
            "originate contract {name} for {src} transferring {amount} from {src} running {file} --init '{init}' --burn-cap 1"
        ));
        let script = origination_script(code, init)?;
        let opts = SubmitOptions { burn_cap: MUTEZ_PER_TEZ, ..Default::default() };
        let mutez = crate::tez::parse_tez(amount).ok_or_else(|| ClientError::BadAmount(amount.into()))?;
        let (addr, s) = self.client.originate(name, mutez, src, script, &opts, false)?;
        self.include(&s)?;
        self.out(format!("New contract {addr} originated as {name}"));
        Ok(addr)
    }

    pub fn storage(&mut self, name: &str) -> Result<String> {
        self.cmd(format!("get script storage for {name}"));
        let s = self.client.storage(name)?.to_inline();
        self.out(s.clone());
        Ok(s)
    }
}

pub struct VoteReport {
    pub vote: Address,
    /// Status of each content of the underpaid call.
    pub underpaid_status: Vec<String>,
    pub underpaid_fee: u64,
    pub bob_before: u64,
    pub bob_after: u64,
    pub storage_before: String,
    pub storage_after_underpaid: String,
    pub storage_final: String,
}

/// Originates the ballot, votes with 0.001 tez (refused, fee kept) and
/// then with 0.005 tez.
pub fn vote(s: &mut Session) -> Result<VoteReport> {
    s.activate("alice")?;
    s.balance("alice")?;
    s.gen_keys("bob")?;
    s.transfer("1", "alice", "bob", None, &SubmitOptions { fee: Some(50_000), ..Default::default() })?;
    s.balance("bob")?;
    s.reveal("bob")?;
    let vote = s.originate("vote", "alice", "0", "vote.tz", VOTE, BALLOT_INIT)?;
    let storage_before = s.storage("vote")?;
    check("initial ballot", BALLOT_INIT.to_string(), storage_before.clone())?;

    let bob_before = s.balance("bob")?;
    let burn = SubmitOptions { burn_cap: MUTEZ_PER_TEZ, ..Default::default() };
    let forced = SubmitOptions { force: true, ..burn.clone() };
    let inc = s.transfer("0.001", "bob", "vote", Some("\"Summit\""), &forced)?;
    let underpaid_status = statuses(&inc.receipt);
    let underpaid_fee = total_fee(&inc.receipt);
    let bob_after = s.balance("bob")?;
    let storage_after_underpaid = s.storage("vote")?;
    check("status of the underpaid vote", vec!["failed".to_string()], underpaid_status.clone())?;
    check("bob pays exactly the fee", underpaid_fee, bob_before - bob_after)?;
    check("ballot after the underpaid vote", storage_before.clone(), storage_after_underpaid.clone())?;

    s.transfer("0.005", "bob", "vote", Some("\"Summit\""), &burn)?;
    let storage_final = s.storage("vote")?;
    check("final ballot", BALLOT_FINAL.to_string(), storage_final.clone())?;
    Ok(VoteReport {
        vote,
        underpaid_status,
        underpaid_fee,
        bob_before,
        bob_after,
        storage_before,
        storage_after_underpaid,
        storage_final,
    })
}

pub struct InsuranceReport {
    pub rain: i64,
    pub oracle: Address,
    pub insurance: Address,
    pub alice: Address,
    pub bob: Address,
    pub beneficiary: Address,
    pub payout: u64,
    pub transfers: Vec<InternalTransfer>,
    pub trigger_receipt: Json,
}

/// Feeds `rain` for the insured date, then has a third party trigger the
/// insurance. Alice is paid when `rain >= 10`, Bob otherwise.
pub fn insurance(s: &mut Session, rain: i64) -> Result<InsuranceReport> {
    let alice = s.activate("alice")?;
    let bob = s.gen_keys("bob")?;
    s.gen_keys("charlie")?;
    s.transfer("200", "bootstrap1", "bob", None, &SubmitOptions::default())?;
    s.transfer("10", "bootstrap1", "charlie", None, &SubmitOptions::default())?;

    let oracle = s.originate("oracle", "alice", "0", "oracle.tz", ORACLE, &format!("Pair {{ }} \"{alice}\""))?;
    s.cmd("show known contract oracle");
    s.out(oracle.to_string());
    let init = format!("Pair (Pair \"{INSURED_DATE}\" (Pair (Pair \"{alice}\" \"{bob}\") {RAIN_THRESHOLD})) \"{oracle}\"");
    let insurance = s.originate("insurance", "bob", "100", "insurance.tz", INSURANCE, &init)?;

    let burn = SubmitOptions { burn_cap: MUTEZ_PER_TEZ, ..Default::default() };
    s.transfer("0", "alice", "oracle", Some(&format!("Right (Pair \"{INSURED_DATE}\" {rain})")), &burn)?;
    let fed = s.storage("oracle")?;
    check("oracle feed", true, fed.contains(&format!("{rain} }}")))?;

    let beneficiary = if rain >= RAIN_THRESHOLD { alice } else { bob };
    let who = if beneficiary == alice { "alice" } else { "bob" };
    let before = s.balance(who)?;
    let payout = s.client.balance("insurance")?;
    let inc = s.transfer("0", "charlie", "insurance", Some("Right Unit"), &burn)?;
    let after = s.balance(who)?;
    let transfers = internal_transfers(&inc.receipt);
    let route: Vec<(Address, Address)> = transfers.iter().map(|t| (t.source, t.destination)).collect();
    check("internal transfers", vec![(insurance, oracle), (oracle, insurance), (insurance, beneficiary)], route)?;
    check("beneficiary credit", payout, after - before)?;
    check("insurance balance", 0, s.client.balance("insurance")?)?;
    Ok(InsuranceReport { rain, oracle, insurance, alice, bob, beneficiary, payout, transfers, trigger_receipt: inc.receipt })
}
