use proptest::prelude::*;
use serde_json::json;
use tzdesk_core::apply::{apply_operation, validate_operation, BlockEnv, Mode, Status};
use tzdesk_core::block::{bootstrap_keys, head_timestamp};
use tzdesk_core::crypto::{hash, SecretKey};
use tzdesk_core::sandbox::Sandbox;
use tzdesk_core::{BlockHash, Constants, Content, ManagerFields, Operation, ProtocolError, Script, Signature};
use tzdesk_michelson::contracts::VOTE;
use tzdesk_michelson::syntax::{parse_expr, Node};
use tzdesk_michelson::{parse_program, Address};

const TEZ: u64 = 1_000_000;

fn env(sb: &Sandbox) -> BlockEnv {
    BlockEnv { level: sb.level() + 1, timestamp: head_timestamp(&sb.ctx) + 60 }
}

fn boot(i: usize) -> SecretKey {
    bootstrap_keys(5).remove(i)
}

fn transfer(sb: &Sandbox, sk: &SecretKey, to: Address, amount: u64, fee: u64, gas: u64) -> Operation {
    let m = sb.manager(&sk.public_key().address(), fee, gas, 0);
    sb.sign(sk, vec![Content::Transaction { m, amount, destination: to, parameters: None }])
}

#[test]
fn plain_transfer_consumes_10100_gas() {
    let sb = Sandbox::new(Constants::desk());
    let bob = SecretKey::from_label("bob").public_key().address();
    let op = transfer(&sb, &boot(0), bob, TEZ, 1269, 10_200);
    let a = apply_operation(&sb.ctx, &op, &env(&sb), Mode::Real).unwrap();
    assert_eq!(a.receipt.results[0].status, Status::Applied);
    assert_eq!(a.receipt.results[0].consumed_gas, 10_100);
    let j = a.receipt.to_json();
    assert_eq!(j["contents"][0]["metadata"]["operation_result"]["consumed_gas"], json!("10100"));
    assert_eq!(a.ctx.balance(&bob), TEZ);
    assert_eq!(a.ctx.pending_fees(), 1269);
    a.ctx.check_conservation().unwrap();
    a.ctx.check_staking().unwrap();
}

#[test]
fn counter_and_limit_checks() {
    let sb = Sandbox::new(Constants::desk());
    let sk = boot(0);
    let me = sk.public_key().address();
    let bob = SecretKey::from_label("bob").public_key().address();
    let mk = |counter: u64, gas: u64, storage: u64| {
        let m = ManagerFields { source: me, fee: 2000, counter, gas_limit: gas, storage_limit: storage };
        sb.sign(&sk, vec![Content::Transaction { m, amount: 1, destination: bob, parameters: None }])
    };
    assert!(matches!(validate_operation(&sb.ctx, &mk(0, 10_200, 0), Mode::Real), Err(ProtocolError::CounterInThePast { .. })));
    assert!(matches!(validate_operation(&sb.ctx, &mk(2, 10_200, 0), Mode::Real), Err(ProtocolError::CounterInTheFuture { .. })));
    assert!(matches!(validate_operation(&sb.ctx, &mk(1, 400_001, 0), Mode::Real), Err(ProtocolError::GasLimitTooHigh(400_001))));
    assert!(matches!(validate_operation(&sb.ctx, &mk(1, 10_200, 60_001), Mode::Real), Err(ProtocolError::StorageLimitTooHigh(_))));
    validate_operation(&sb.ctx, &mk(1, 400_000, 60_000), Mode::Real).unwrap();
}

#[test]
fn any_signature_only_in_simulation() {
    let sb = Sandbox::new(Constants::desk());
    let bob = SecretKey::from_label("bob").public_key().address();
    let mut op = transfer(&sb, &boot(0), bob, TEZ, 1269, 10_200);
    op.signature = Signature::ANY;
    validate_operation(&sb.ctx, &op, Mode::Simulate).unwrap();
    assert_eq!(validate_operation(&sb.ctx, &op, Mode::Real), Err(ProtocolError::InvalidSignature));
    let forged = transfer(&sb, &boot(1), bob, TEZ, 1269, 10_200);
    op.signature = forged.signature;
    assert_eq!(validate_operation(&sb.ctx, &op, Mode::Simulate), Err(ProtocolError::InvalidSignature));
}

#[test]
fn unrevealed_sources_reveal_in_batch() {
    let mut sb = Sandbox::new(Constants::desk());
    let alice = SecretKey::from_label("alice");
    let a = alice.public_key().address();
    sb.bake(&[transfer(&sb, &boot(0), a, 100 * TEZ, 2000, 10_200)]).unwrap();
    let bob = SecretKey::from_label("bob").public_key().address();
    let lone = transfer(&sb, &alice, bob, TEZ, 2000, 10_200);
    assert_eq!(validate_operation(&sb.ctx, &lone, Mode::Real), Err(ProtocolError::UnrevealedKey(a)));
    let m1 = sb.manager(&a, 1500, 10_000, 0);
    let mut m2 = sb.manager(&a, 1500, 10_200, 0);
    m2.counter += 1;
    let op = sb.sign(
        &alice,
        vec![
            Content::Reveal { m: m1, public_key: alice.public_key() },
            Content::Transaction { m: m2, amount: TEZ, destination: bob, parameters: None },
        ],
    );
    let r = sb.bake(&[op]).unwrap();
    assert!(r.receipts[0].succeeded());
    assert_eq!(r.receipts[0].results[0].consumed_gas, 10_000);
    assert_eq!(sb.ctx.balance(&a), 100 * TEZ - 3000 - TEZ);
    assert_eq!(sb.ctx.manager_key(&a), Some(alice.public_key()));
    let again = sb.sign(&alice, vec![Content::Reveal { m: sb.manager(&a, 1500, 10_000, 0), public_key: alice.public_key() }]);
    assert_eq!(validate_operation(&sb.ctx, &again, Mode::Real), Err(ProtocolError::PreviouslyRevealed(a)));
}

#[test]
fn overdraft_is_rejected() {
    let sb = Sandbox::new(Constants::desk());
    let bob = SecretKey::from_label("bob").public_key().address();
    let op = transfer(&sb, &boot(0), bob, 5_000_000 * TEZ, 1269, 10_200);
    assert!(matches!(apply_operation(&sb.ctx, &op, &env(&sb), Mode::Simulate), Err(ProtocolError::BalanceTooLow { .. })));
}

/// A funded, revealed account that never bakes.
fn user(sb: &mut Sandbox, label: &str, amount: u64) -> SecretKey {
    let sk = SecretKey::from_label(label);
    let a = sk.public_key().address();
    sb.bake(&[transfer(sb, &boot(0), a, amount, 2000, 10_200)]).unwrap();
    let m = sb.manager(&a, 2000, 10_000, 0);
    sb.bake(&[sb.sign(&sk, vec![Content::Reveal { m, public_key: sk.public_key() }])]).unwrap();
    sk
}

fn vote_script() -> Script {
    Script {
        code: Node::seq(parse_program(VOTE).unwrap().to_nodes()),
        storage: parse_expr("{ Elt \"Sierra\" 0 ; Elt \"Summit\" 0 ; Elt \"Sunway\" 0 ; Elt \"Tianhe-2A\" 0 }").unwrap(),
    }
}

fn originate_vote(sb: &mut Sandbox) -> Address {
    let sk = boot(0);
    let m = sb.manager(&sk.public_key().address(), 50_000, 50_000, 1_000);
    let op = sb.sign(&sk, vec![Content::Origination { m, balance: 0, delegate: None, script: vote_script() }]);
    let r = sb.bake(&[op]).unwrap();
    let res = &r.receipts[0].results[0];
    assert_eq!(res.status, Status::Applied, "{:?}", res.errors);
    assert!(res.burned > 0 && res.burned == res.paid_storage_size_diff * 1000);
    res.originated[0]
}

fn summit(sb: &Sandbox, vote: &Address) -> String {
    let s = tzdesk_core::apply::load_storage(&sb.ctx, vote).unwrap().to_string();
    s.split("Elt \"Summit\" ").nth(1).unwrap().split(' ').next().unwrap().to_string()
}

#[test]
fn failed_vote_keeps_the_fee_only() {
    let mut sb = Sandbox::new(Constants::desk());
    let vote = originate_vote(&mut sb);
    let bob = user(&mut sb, "bob", 1000 * TEZ);
    let b = bob.public_key().address();
    let call = |sb: &Sandbox, amount: u64| {
        let m = sb.manager(&b, 10_000, 30_000, 100);
        sb.sign(&bob, vec![Content::Transaction { m, amount, destination: vote, parameters: Some(Node::string("Summit")) }])
    };
    let before = sb.ctx.balance(&b);
    let storage_before = sb.ctx.get(&["contracts", &vote.to_string(), "storage"]).unwrap().to_vec();
    let r = sb.bake(&[call(&sb, 1_000)]).unwrap();
    let res = &r.receipts[0].results[0];
    assert_eq!(res.status, Status::Failed);
    assert!(matches!(res.errors[0], ProtocolError::ScriptFailed { .. }));
    assert_eq!(sb.ctx.balance(&b) + 10_000, before);
    assert_eq!(sb.ctx.get(&["contracts", &vote.to_string(), "storage"]).unwrap(), &storage_before[..]);
    assert_eq!(sb.ctx.balance(&vote), 0);
    assert_eq!(summit(&sb, &vote), "0");

    let r = sb.bake(&[call(&sb, 5_000)]).unwrap();
    assert!(r.receipts[0].succeeded(), "{:?}", r.receipts[0].results);
    assert_eq!(summit(&sb, &vote), "1");
    assert_eq!(sb.ctx.balance(&vote), 5_000);
    sb.ctx.check_conservation().unwrap();
}

#[test]
fn origination_rejects_ill_typed_scripts_and_storage() {
    let sb = Sandbox::new(Constants::desk());
    let sk = boot(0);
    let me = sk.public_key().address();
    let mut script = vote_script();
    script.storage = parse_expr("{ Elt \"Summit\" 0 ; Elt \"Sierra\" 0 }").unwrap();
    let m = sb.manager(&me, 50_000, 50_000, 1_000);
    let op = sb.sign(&sk, vec![Content::Origination { m, balance: 0, delegate: None, script }]);
    let a = apply_operation(&sb.ctx, &op, &env(&sb), Mode::Real).unwrap();
    assert_eq!(a.receipt.results[0].status, Status::Failed);
    assert!(matches!(a.receipt.results[0].errors[0], ProtocolError::ScriptRejected(_)));
    let m = sb.manager(&me, 50_000, 50_000, 10);
    let op = sb.sign(&sk, vec![Content::Origination { m, balance: 0, delegate: None, script: vote_script() }]);
    let a = apply_operation(&sb.ctx, &op, &env(&sb), Mode::Real).unwrap();
    assert!(matches!(a.receipt.results[0].errors[0], ProtocolError::StorageLimitExceeded { .. }));
    assert_eq!(a.ctx.balance(&me), sb.ctx.balance(&me) - 50_000);
}

#[test]
fn delegation_moves_rolls_not_tokens() {
    let mut sb = Sandbox::new(Constants::desk());
    let carol = SecretKey::from_label("carol");
    let c = carol.public_key().address();
    let (d1, d2) = (boot(1).public_key().address(), boot(2).public_key().address());
    sb.bake(&[transfer(&sb, &boot(0), c, 25_000 * TEZ, 2000, 10_200)]).unwrap();
    let m1 = sb.manager(&c, 2000, 10_000, 0);
    let mut m2 = sb.manager(&c, 2000, 10_000, 0);
    m2.counter += 1;
    let r1 = sb.ctx.rolls_of(&d1).unwrap();
    let op = sb.sign(
        &carol,
        vec![Content::Reveal { m: m1, public_key: carol.public_key() }, Content::Delegation { m: m2, delegate: Some(d1) }],
    );
    sb.bake(&[op]).unwrap();
    let bal = sb.ctx.balance(&c);
    assert_eq!(sb.ctx.rolls_of(&d1).unwrap(), r1 + 2);
    let r2 = sb.ctx.rolls_of(&d2).unwrap();
    let m = sb.manager(&c, 2000, 10_000, 0);
    sb.bake(&[sb.sign(&carol, vec![Content::Delegation { m, delegate: Some(d2) }])]).unwrap();
    assert_eq!(sb.ctx.balance(&c), bal - 2000);
    assert_eq!(sb.ctx.rolls_of(&d1).unwrap(), r1);
    assert_eq!(sb.ctx.rolls_of(&d2).unwrap(), r2 + 2);
    sb.ctx.check_staking().unwrap();
}

#[test]
fn activation_mints_once() {
    let mut sb = Sandbox::new(Constants::desk());
    let pkh = SecretKey::from_label("faucet").public_key().address();
    let secret = tzdesk_core::operation::activation_secret(&pkh, 1000 * TEZ);
    let act = |amount| Operation::unsigned(tzdesk_core::head_hash(&sb.ctx), vec![Content::Activation { pkh, secret, amount }]);
    assert_eq!(apply_operation(&sb.ctx, &act(2000 * TEZ), &env(&sb), Mode::Real).unwrap_err(), ProtocolError::InvalidActivation);
    let op = act(1000 * TEZ);
    sb.bake(&[op.clone()]).unwrap();
    assert_eq!(sb.ctx.balance(&pkh), 1000 * TEZ);
    assert_eq!(sb.ctx.supply("minted") % TEZ, 0);
    sb.ctx.check_conservation().unwrap();
    let again = Operation::unsigned(tzdesk_core::head_hash(&sb.ctx), op.contents.clone());
    assert_eq!(apply_operation(&sb.ctx, &again, &env(&sb), Mode::Real).unwrap_err(), ProtocolError::AlreadyActivated(pkh));
}

#[test]
fn rolls_examples() {
    let mut sb = Sandbox::new(Constants::desk());
    let d = SecretKey::from_label("d");
    let a = d.public_key().address();
    let ctx = &mut sb.ctx;
    ctx.credit(&a, 25_000 * TEZ).unwrap();
    ctx.set_delegate(&a, Some(a)).unwrap();
    assert_eq!(ctx.rolls_of(&a).unwrap(), 2);
    let mut k = ctx.constants();
    k.tokens_per_roll = 8_000 * TEZ;
    ctx.set_constants(&k);
    assert_eq!(ctx.rolls_of(&a).unwrap(), 3);
    ctx.debit(&a, 25_000 * TEZ - 7_999 * TEZ).unwrap();
    assert_eq!(ctx.rolls_of(&a).unwrap(), 0);
}

fn arb_transfer() -> impl Strategy<Value = Operation> {
    (any::<[u8; 20]>(), any::<u64>(), any::<u64>(), 0u64..400_001, 0u64..60_001, any::<u64>(), any::<bool>(), -1000i64..1000)
        .prop_map(|(dest, fee, counter, gas, storage, amount, with_param, n)| {
            let sk = SecretKey::from_label("p");
            let m = ManagerFields { source: sk.public_key().address(), fee, counter, gas_limit: gas, storage_limit: storage };
            let parameters = with_param.then(|| Node::prim("Pair", vec![Node::int(n), Node::string("x")]));
            Operation::sign(
                BlockHash(hash(&dest)),
                vec![Content::Transaction { m, amount, destination: Address::originated(dest), parameters }],
                &sk,
            )
        })
}

proptest! {
    #[test]
    fn forging_round_trips(op in arb_transfer()) {
        let bytes = op.to_bytes();
        prop_assert_eq!(Operation::from_bytes(&bytes).unwrap(), op.clone());
        let j = tzdesk_core::json::operation_to_json(&op);
        prop_assert_eq!(tzdesk_core::json::operation_from_json(&j).unwrap(), op);
    }

    #[test]
    fn minimal_fee_grows_with_gas(op in arb_transfer()) {
        let mut doubled = op.clone();
        let m = doubled.contents[0].manager_mut().unwrap();
        prop_assume!(m.gas_limit > 0 && m.gas_limit < u64::MAX / 2);
        m.gas_limit *= 2;
        prop_assert!(doubled.minimal_fee() > op.minimal_fee());
    }
}

#[test]
fn minimal_fee_floor() {
    let sk = SecretKey::from_label("p");
    let m = ManagerFields { source: sk.public_key().address(), fee: 0, counter: 0, gas_limit: 0, storage_limit: 0 };
    let op = Operation::sign(BlockHash::default(), vec![Content::Reveal { m, public_key: sk.public_key() }], &sk);
    assert_eq!(op.minimal_fee() - op.size() as u64, 100);
}
