//! Acceptance suite: one PASS/FAIL line per criterion, each against its
//! time bound. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;
use tzdesk_client::scenario::{self, Session, BALLOT_FINAL, BALLOT_INIT, RAIN_THRESHOLD};
use tzdesk_client::{Client, InProcess, SubmitOptions, Wallet};
use tzdesk_core::apply::Status;
use tzdesk_core::block::apply_block;
use tzdesk_core::crypto::{hash, SecretKey};
use tzdesk_core::rights::{draw, snapshot};
use tzdesk_core::testkit::{no_nested_frames, run_amendment_vote, CallTreeWorld};
use tzdesk_core::voting::{amendment_hash, protocol};
use tzdesk_core::{apply_operation, BlockEnv, Constants, Context, Mode, Operation, MUTEZ_PER_TEZ};
use tzdesk_michelson::interp::{run_script, ExecEnv, ExecErrorKind};
use tzdesk_michelson::testkit::{ill_typed_corpus, originated_pool, random_ty, random_value, FuzzContracts, ProgramGen};
use tzdesk_michelson::{expand_macros, parse_program, typecheck_program, Address};
use tzdesk_node::{FaucetFile, Method, NodeService};
use tzdesk_sim::engine::node_key;
use tzdesk_sim::{run_simulation, DoubleBake, Outcome, SimConfig};

const TEZ: u64 = MUTEZ_PER_TEZ;

fn constants() {
    let node = NodeService::new(Constants::mainnet());
    let j = node.handle(Method::Get, "/chains/main/blocks/head/context/constants", None).unwrap();
    assert_eq!(j["hard_gas_limit_per_operation"], "400000");
    assert_eq!(j["hard_storage_limit_per_operation"], "60000");
    let k = node.head().constants();
    assert_eq!(k.tokens_per_roll, 10_000 * TEZ);
    assert_eq!((k.block_reward, k.endorsement_reward), (16 * TEZ, 2 * TEZ));
    assert_eq!((k.block_security_deposit, k.endorsement_security_deposit), (256 * TEZ, 64 * TEZ));
    assert_eq!(k.endorsers_per_block, 32);
    assert_eq!(k.blocks_per_cycle, 4096);
    assert_eq!(k.cost_per_byte, TEZ / 1000);
    assert_eq!(k.supermajority_percent, 80);
}

struct TransferRun {
    paths: Vec<String>,
    entries: Vec<(String, Option<Json>, Json)>,
    hash: String,
    local_hash: String,
    size: usize,
    injected_bytes: usize,
}

fn transfer_run() -> TransferRun {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let node = Arc::new(NodeService::new(Constants::mainnet()));
    let mut c = Client::new(InProcess::new(node), Wallet::in_memory());
    let faucet = FaucetFile::generate(&mut rng, 10_000 * TEZ);
    let h = c.activate("alice", &faucet).unwrap();
    c.wait_for(&h.to_string(), 0).unwrap();
    let r = c.reveal("alice", &SubmitOptions::default()).unwrap();
    c.wait_for(&r.hash.to_string(), 0).unwrap();
    c.wallet.gen_keys("bob", &mut rng).unwrap();
    c.verbose = false;
    c.log.clear();
    let s = c.transfer(TEZ, "alice", "bob", None, &SubmitOptions { fee: Some(50_000), ..Default::default() }).unwrap();
    let injected = c.log.iter().find(|e| e.path.starts_with("/injection")).unwrap();
    let injected_bytes = injected.request.as_ref().unwrap().as_str().unwrap().len() / 2;
    TransferRun {
        paths: c.logged_paths(),
        entries: c.log.iter().map(|e| (e.path.clone(), e.request.clone(), e.response.clone())).collect(),
        hash: s.hash.to_string(),
        local_hash: s.operation.hash().to_string(),
        size: s.operation.size(),
        injected_bytes,
    }
}

fn transfer() {
    let run = transfer_run();
    let expected_tail = [
        "/monitor/bootstrapped",
        "/chains/main/blocks/head/context/constants",
        "/chains/main/blocks/head/hash",
        "/chains/main/chain_id",
        "/chains/main/blocks/head/helpers/scripts/run_operation",
        "/chains/main/blocks/head/helpers/preapply/operations",
        "/injection/operation?chain=main",
        "/chains/main/blocks/head/helpers/forge/operations",
    ];
    assert_eq!(run.paths.len(), 10, "{:?}", run.paths);
    assert!(run.paths[0].ends_with("/counter"), "{:?}", run.paths);
    assert!(run.paths[1].ends_with("/manager_key"), "{:?}", run.paths);
    assert_eq!(&run.paths[2..], &expected_tail);

    let by_path = |p: &str| run.entries.iter().find(|e| e.0 == p).unwrap();
    let (_, req, resp) = by_path("/chains/main/blocks/head/helpers/scripts/run_operation");
    let sim = &req.as_ref().unwrap()["contents"][0];
    assert_eq!(sim["kind"], "transaction");
    assert_eq!(sim["fee"], "50000");
    assert_eq!(sim["amount"], "1000000");
    assert_eq!(resp["contents"][0]["metadata"]["operation_result"]["consumed_gas"], "10100");

    let (_, req, resp) = by_path("/chains/main/blocks/head/helpers/preapply/operations");
    let pre = &req.as_ref().unwrap()[0]["contents"][0];
    assert_eq!(pre["fee"], "1269");
    assert_eq!(pre["gas_limit"], "10200");
    assert_eq!(pre["storage_limit"], "0");
    assert_eq!(resp[0]["contents"][0]["metadata"]["operation_result"]["status"], "applied");
    assert_eq!(run.size, 149);
    assert_eq!(run.injected_bytes, 149);

    let (_, _, injected) = by_path("/injection/operation?chain=main");
    assert_eq!(injected.as_str(), Some(run.hash.as_str()));
    assert_eq!(run.hash, run.local_hash);
    assert_eq!(run.hash, transfer_run().hash);
}

fn score_recurrence() {
    let mut cfg = SimConfig::new(5, 200, 33);
    cfg.endorsement_rate = 0.5;
    let out = run_simulation(&cfg).unwrap();
    for chain in &out.chains {
        assert_eq!(chain.len(), 200);
        let mut prev = tzdesk_core::score(&out.genesis);
        let mut counts = std::collections::BTreeSet::new();
        for c in chain {
            let n = c.block.endorsements.len() as u64;
            counts.insert(n);
            assert_eq!(tzdesk_core::score(&c.ctx), 1 + prev + n, "level {}", c.block.header.level);
            prev = tzdesk_core::score(&c.ctx);
        }
        assert!(counts.len() > 3, "endorsement counts barely vary: {counts:?}");
    }
}

fn vote() {
    let mut s = Session::new(1).unwrap();
    let r = scenario::vote(&mut s).unwrap_or_else(|e| panic!("{e}\n{}", s.text()));
    assert_eq!(r.underpaid_status, vec!["failed"]);
    assert!(r.underpaid_fee > 0);
    assert_eq!(r.bob_before - r.bob_after, r.underpaid_fee);
    assert_eq!(r.storage_before, BALLOT_INIT);
    assert_eq!(r.storage_after_underpaid, BALLOT_INIT);
    assert_eq!(r.storage_final, BALLOT_FINAL);
    assert_eq!(BALLOT_FINAL.replace("\"Summit\" 1", "\"Summit\" 0"), BALLOT_INIT);
}

fn insurance() {
    for (rain, seed) in [(15, 1), (5, 2), (RAIN_THRESHOLD, 3)] {
        let mut s = Session::new(seed).unwrap();
        let r = scenario::insurance(&mut s, rain).unwrap_or_else(|e| panic!("{e}\n{}", s.text()));
        let route: Vec<(Address, Address)> = r.transfers.iter().map(|t| (t.source, t.destination)).collect();
        let expected = if rain >= 10 { r.alice } else { r.bob };
        assert_eq!(r.beneficiary, expected);
        assert_eq!(route, vec![(r.insurance, r.oracle), (r.oracle, r.insurance), (r.insurance, expected)]);
        assert!(r.transfers.iter().all(|t| t.status == "applied"));
        assert_eq!(r.transfers[2].amount, 100 * TEZ);
    }
}

/// Replays every block of a node's chain, checking each block's VM trace.
fn replay_traces(node: &NodeService) -> usize {
    node.with_sandbox(|sb| {
        let mut ops = 0;
        for (i, b) in sb.blocks.iter().enumerate() {
            let r = apply_block(&sb.history[i], b).unwrap();
            assert!(no_nested_frames(&r.trace), "block {}: {:?}", i + 1, r.trace);
            ops += b.operations.len();
        }
        ops
    })
}

fn anti_reentrancy() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut applied, mut failed) = (0, 0);
    for _ in 0..10 {
        let mut world = CallTreeWorld::new(&mut rng, 8);
        let env = BlockEnv { level: world.sandbox.level() + 1, timestamp: 1_557_187_200 + 3600 };
        for _ in 0..100 {
            let op = world.random_call(&mut rng);
            let a = apply_operation(&world.sandbox.ctx, &op, &env, Mode::Real).unwrap();
            assert!(no_nested_frames(&a.trace), "nested frames: {:?}", a.trace);
            match a.receipt.results[0].status {
                Status::Applied => applied += 1,
                _ => failed += 1,
            }
            world.sandbox.ctx = a.ctx;
        }
    }
    assert_eq!(applied + failed, 1000);
    assert!(applied > 0 && failed > 0);

    let mut s = Session::new(5).unwrap();
    scenario::vote(&mut s).unwrap();
    assert!(replay_traces(&s.node()) > 0);
    let mut s = Session::new(6).unwrap();
    scenario::insurance(&mut s, 15).unwrap();
    assert!(replay_traces(&s.node()) > 0);
}

fn byzantine_run(levels: u64, seed: u64) -> (SimConfig, Outcome) {
    let mut cfg = SimConfig::new(5, levels, seed);
    cfg.endorsement_rate = 0.8;
    cfg.byzantine.push(DoubleBake { node: 2, level: 20 });
    let out = run_simulation(&cfg).unwrap();
    (cfg, out)
}

fn conservation() {
    let (_, out) = byzantine_run(500, 77);
    let s = &out.summary;
    assert!(s.conservation_violations.is_empty(), "{:?}", s.conservation_violations);
    assert!(s.conservation_checks >= 5 * 500, "{} checks", s.conservation_checks);
    assert!(!s.slashings.is_empty());
    for chain in &out.chains {
        assert_eq!(chain.len(), 500);
        for c in chain {
            c.ctx.check_conservation().unwrap_or_else(|e| panic!("level {}: {e:?}", c.block.header.level));
        }
    }
}

fn slashing() {
    let (cfg, out) = byzantine_run(60, 78);
    let s = &out.summary;
    let offender = node_key(2).public_key().address();
    assert_eq!(s.slashings.len(), 1, "{:?}", s.slashings);
    let sl = &s.slashings[0];
    assert_eq!(sl.offender, offender.to_string());
    assert_eq!(sl.level, 20);
    let k = &cfg.constants;
    let chain = &out.chains[0];
    let at = sl.included_at as usize - 1;
    let (before, after) = (&chain[at - 1].ctx, &chain[at].ctx);
    let b = &chain[at].block;
    let mut earned = 0;
    if b.header.baker == offender {
        earned += k.block_security_deposit + k.block_reward;
    }
    let slots = b.endorsements.iter().filter(|e| e.delegate == offender).count() as u64;
    earned += slots * (k.endorsement_security_deposit + k.endorsement_reward);
    assert!(before.total_frozen(&offender) > 0);
    assert_eq!(sl.burned, before.total_frozen(&offender) + earned);
    assert_eq!(after.total_frozen(&offender), 0);
    assert_eq!(after.supply("burned") - before.supply("burned"), sl.burned);
    let accusations = b.operations.iter().filter(|o| is_accusation(o)).count();
    assert_eq!(accusations, 1);
}

fn is_accusation(op: &Operation) -> bool {
    op.contents.iter().any(|c| matches!(c, tzdesk_core::Content::DoubleBaking { .. }))
}

fn amendment() {
    let (sb, _) = run_amendment_vote(80, 20);
    assert_eq!(sb.ctx.constants().tokens_per_roll, 8_000 * TEZ);
    assert_eq!(protocol(&sb.ctx), amendment_hash("roll-8000"));
    let y = SecretKey::from_label("yay-delegate").public_key().address();
    assert_eq!(sb.ctx.rolls_of(&y).unwrap(), 100);
    let before: u64 = snapshot(&sb.history[16], 1).unwrap().iter().map(|(_, r)| r).sum();
    let after: u64 = snapshot(&sb.ctx, 2).unwrap().iter().map(|(_, r)| r).sum();
    assert_eq!((before, after), (100, 125));

    let (sb, _) = run_amendment_vote(79, 21);
    assert_eq!(sb.ctx.constants().tokens_per_roll, 10_000 * TEZ);
    assert_ne!(protocol(&sb.ctx), amendment_hash("roll-8000"));
    assert_eq!(sb.ctx.rolls_of(&y).unwrap(), 79);
}

fn slot_fairness() {
    let rolls = [5u64, 10, 20, 25, 40];
    let snap: Vec<(Address, u64)> = rolls.iter().enumerate().map(|(i, r)| (node_key(i).public_key().address(), *r)).collect();
    let total: u64 = rolls.iter().sum();
    let seed = hash(b"fairness");
    let levels = 10_000u64;
    let mut wins: BTreeMap<Address, u64> = BTreeMap::new();
    for level in 1..=levels {
        *wins.entry(draw(&snap, &seed, level, b"baking", 0).unwrap()).or_default() += 1;
    }
    for (d, r) in &snap {
        let share = *wins.get(d).unwrap_or(&0) as f64 / levels as f64;
        let expected = *r as f64 / total as f64;
        assert!((share - expected).abs() <= 0.02, "{d}: share {share:.4}, rolls {expected:.4}");
    }
}

fn typecheck_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    for case in 0..10_000 {
        let raw = ProgramGen::new(&mut rng, 40).program();
        let typed = typecheck_program(&raw).unwrap_or_else(|e| panic!("case {case}: generated program is ill-typed: {e}"));
        let param = random_value(&mut rng, &raw.parameter);
        let storage = random_value(&mut rng, &raw.storage);
        let contracts = FuzzContracts(originated_pool().into_iter().map(|a| (a, random_ty(&mut rng, 1))).collect::<BTreeMap<_, _>>());
        let env = ExecEnv {
            amount: rng.gen_range(0..1000),
            sender: Address::implicit([1; 20]),
            source: Address::implicit([2; 20]),
            self_address: Address::originated([11; 20]),
            balance: 5_000,
            now: 1_557_271_345,
            gas_limit: 20_000,
            contracts: &contracts,
        };
        if let Err(e) = run_script(&typed, param, storage, &env) {
            assert!(!matches!(e.kind, ExecErrorKind::StackShape(_)), "case {case}: {e}");
        }
    }
    let corpus = ill_typed_corpus();
    assert!(corpus.len() >= 100);
    for (kind, src) in corpus {
        let raw = expand_macros(&parse_program(src).unwrap()).unwrap();
        let e = typecheck_program(&raw).err().unwrap_or_else(|| panic!("accepted: {src}"));
        assert_eq!(e.kind(), kind, "{src}");
    }
}

fn reapply(parent: &Context, block: &tzdesk_core::Block, expected: &Context) {
    let r = apply_block(parent, block).unwrap();
    assert_eq!(r.ctx.context_hash(), expected.context_hash(), "level {}", block.header.level);
}

fn determinism() {
    let mut cfg = SimConfig::new(5, 120, 99);
    cfg.endorsement_rate = 0.7;
    cfg.latency.max_ms = 3_000;
    cfg.byzantine.push(DoubleBake { node: 1, level: 9 });
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a.log_jsonl(), b.log_jsonl());
    for chain in &a.chains {
        let mut parent = &a.genesis;
        for c in chain {
            reapply(parent, &c.block, &c.ctx);
            reapply(parent, &c.block, &c.ctx);
            parent = &c.ctx;
        }
    }
    let mut s = Session::new(9).unwrap();
    scenario::insurance(&mut s, 15).unwrap();
    s.node().with_sandbox(|sb| {
        for (i, blk) in sb.blocks.iter().enumerate() {
            reapply(&sb.history[i], blk, &sb.history[i + 1]);
        }
    });
}

fn main() {
    let criteria: [(&str, u64, fn()); 12] = [
        ("constants", 1, constants),
        ("transfer choreography", 5, transfer),
        ("score recurrence", 10, score_recurrence),
        ("fees kept on failure", 5, vote),
        ("insurance end-to-end", 5, insurance),
        ("anti-reentrancy", 60, anti_reentrancy),
        ("conservation", 60, conservation),
        ("slashing", 30, slashing),
        ("amendment vote", 30, amendment),
        ("slot fairness", 60, slot_fairness),
        ("typecheck soundness", 120, typecheck_soundness),
        ("purity and determinism", 60, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, bound, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let took = start.elapsed();
        let verdict = match result {
            Ok(()) if took <= Duration::from_secs(*bound) => "PASS".to_string(),
            Ok(()) => format!("FAIL (over the {bound} s bound)"),
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                format!("FAIL: {}", msg.unwrap_or_default())
            }
        };
        if !verdict.starts_with("PASS") {
            failures += 1;
        }
        println!("criterion {:>2} {name:<24} {:>8.3} s  {verdict}", i + 1, took.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
