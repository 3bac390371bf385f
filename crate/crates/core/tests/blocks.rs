use tzdesk_core::apply::{apply_operation, BlockEnv, Mode, Status};
use tzdesk_core::block::{apply_block, bootstrap_keys, head_hash, head_timestamp, score};
use tzdesk_core::crypto::SecretKey;
use tzdesk_core::header::{Block, Endorsement};
use tzdesk_core::rights::{baker_at, endorsement_slots};
use tzdesk_core::sandbox::Sandbox;
use tzdesk_core::{Constants, Content, Operation, ProtocolError};
use tzdesk_michelson::Address;

const TEZ: u64 = 1_000_000;

fn key_of(sb: &Sandbox, a: &Address) -> SecretKey {
    sb.keys[a].clone()
}

fn frozen_sum(sb: &Sandbox, cycle: u64) -> (u64, u64, u64) {
    let mut t = (0, 0, 0);
    for d in sb.ctx.delegates() {
        let f = sb.ctx.frozen(&d, cycle);
        t.0 += f.deposits;
        t.1 += f.rewards;
        t.2 += f.fees;
    }
    t
}

#[test]
fn empty_block_freezes_deposit_and_reward() {
    let mut sb = Sandbox::new(Constants::desk());
    let baker = baker_at(&sb.ctx, 1, 0).unwrap();
    let before = sb.ctx.balance(&baker);
    let b = sb.forge_next(&[]);
    assert_eq!(b.header.priority, 0);
    sb.apply(b).unwrap();
    let f = sb.ctx.frozen(&baker, 0);
    assert_eq!(f.deposits, 256 * TEZ);
    assert_eq!(f.rewards, 16 * TEZ);
    assert_eq!(sb.ctx.balance(&baker), before - 256 * TEZ);
    assert_eq!(score(&sb.ctx), 1);
    sb.ctx.check_conservation().unwrap();
    sb.ctx.check_staking().unwrap();
}

#[test]
fn full_endorsements_pay_per_slot() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(1);
    let b = sb.forge_next(&[]);
    assert_eq!(b.endorsements.len(), 32);
    sb.apply(b).unwrap();
    let (deposits, rewards, _) = frozen_sum(&sb, 0);
    assert_eq!(rewards, 2 * 16 * TEZ + 32 * 2 * TEZ);
    assert_eq!(deposits, 2 * 256 * TEZ + 32 * 64 * TEZ);
    assert_eq!(score(&sb.ctx), 1 + 1 + 32);
    sb.ctx.check_conservation().unwrap();
}

fn block_with(sb: &Sandbox, endorsements: usize) -> Block {
    let mut b = sb.forge_next(&[]);
    b.endorsements.truncate(endorsements);
    let (priority, sk) = sb.next_baker();
    Block::forge(&sk, b.header.level, b.header.predecessor, b.header.timestamp, priority, b.endorsements, vec![])
}

#[test]
fn score_recurrence_examples() {
    let mut sb = Sandbox::new(Constants::desk());
    assert_eq!(score(&sb.ctx), 0);
    for _ in 0..10 {
        let b = block_with(&sb, 0);
        sb.apply(b).unwrap();
    }
    assert_eq!(score(&sb.ctx), 10);
    let parent = sb.ctx.clone();
    let rich = block_with(&sb, 32);
    let poor = block_with(&sb, 10);
    let a = apply_block(&parent, &rich).unwrap();
    let b = apply_block(&parent, &poor).unwrap();
    assert_eq!(score(&a.ctx), 43);
    assert_eq!(score(&b.ctx), 21);
    assert!(score(&a.ctx) > score(&b.ctx));
}

#[test]
fn applying_twice_is_deterministic() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(3);
    let b = sb.forge_next(&[]);
    let x = apply_block(&sb.ctx, &b).unwrap().ctx.context_hash();
    let y = apply_block(&sb.ctx, &b).unwrap().ctx.context_hash();
    assert_eq!(x, y);
    let mut other = Sandbox::new(Constants::desk());
    other.bake_empty(3);
    assert_eq!(other.ctx.context_hash(), sb.ctx.context_hash());
}

#[test]
fn header_checks() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(1);
    let good = sb.forge_next(&[]);
    let h = &good.header;
    let owner = baker_at(&sb.ctx, h.level, 0).unwrap();
    let intruder = sb.keys.keys().find(|a| **a != owner).copied().unwrap();
    let wrong = Block::forge(&key_of(&sb, &intruder), h.level, h.predecessor, h.timestamp, 0, vec![], vec![]);
    assert!(matches!(apply_block(&sb.ctx, &wrong), Err(ProtocolError::WrongBaker { .. })));
    let sk = key_of(&sb, &owner);
    let early = Block::forge(&sk, h.level, h.predecessor, head_timestamp(&sb.ctx) + 59, 0, vec![], vec![]);
    assert!(matches!(apply_block(&sb.ctx, &early), Err(ProtocolError::TimestampTooEarly { .. })));
    let skip = Block::forge(&sk, h.level + 1, h.predecessor, h.timestamp, 0, vec![], vec![]);
    assert!(matches!(apply_block(&sb.ctx, &skip), Err(ProtocolError::WrongLevel { .. })));
    let mut forged = good.clone();
    forged.header.timestamp += 1;
    assert_eq!(apply_block(&sb.ctx, &forged).unwrap_err(), ProtocolError::InvalidBlockSignature);
    let mut stuffed = good.clone();
    stuffed.endorsements.pop();
    assert_eq!(apply_block(&sb.ctx, &stuffed).unwrap_err(), ProtocolError::BadOperationsHash);
}

#[test]
fn endorsement_checks() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(1);
    let slots = endorsement_slots(&sb.ctx, 1).unwrap();
    let (priority, sk) = sb.next_baker();
    let ts = head_timestamp(&sb.ctx) + 60 * (1 + priority as i64);
    let head = head_hash(&sb.ctx);
    let mk = |es: Vec<Endorsement>| Block::forge(&sk, 2, head, ts, priority, es, vec![]);
    let thief = sb.keys.keys().find(|a| **a != slots[0]).copied().unwrap();
    let stolen = Endorsement::new(&key_of(&sb, &thief), 1, 0, head);
    assert!(matches!(apply_block(&sb.ctx, &mk(vec![stolen])), Err(ProtocolError::InvalidEndorsement(_))));
    let e = Endorsement::new(&key_of(&sb, &slots[0]), 1, 0, head);
    assert!(matches!(apply_block(&sb.ctx, &mk(vec![e.clone(), e.clone()])), Err(ProtocolError::InvalidEndorsement(_))));
    let stale = Endorsement::new(&key_of(&sb, &slots[0]), 1, 0, sb.genesis.hash);
    assert!(matches!(apply_block(&sb.ctx, &mk(vec![stale])), Err(ProtocolError::InvalidEndorsement(_))));
    apply_block(&sb.ctx, &mk(vec![e])).unwrap();
}

#[test]
fn deposits_unfreeze_after_preserved_cycles() {
    let mut sb = Sandbox::new(Constants::desk());
    let k = Constants::desk();
    let cycle_blocks = k.blocks_per_cycle * (k.preserved_cycles + 1);
    let mut unfrozen_total = 0;
    for _ in 0..cycle_blocks {
        let r = sb.bake(&[]).unwrap();
        sb.ctx.check_conservation().unwrap();
        unfrozen_total += r.unfrozen.iter().map(|(_, v)| v).sum::<u64>();
    }
    let first_cycle: u64 = sb.history[k.blocks_per_cycle as usize]
        .delegates()
        .iter()
        .map(|d| sb.history[k.blocks_per_cycle as usize].frozen(d, 0).total())
        .sum();
    assert!(first_cycle > 0);
    assert_eq!(unfrozen_total, first_cycle);
    assert_eq!(frozen_sum(&sb, 0), (0, 0, 0));
    sb.ctx.check_staking().unwrap();
}

fn double_bake(sb: &Sandbox) -> (Block, Block) {
    let a = sb.forge_next(&[]);
    let (priority, sk) = sb.next_baker();
    let h = &a.header;
    let b = Block::forge(&sk, h.level, h.predecessor, h.timestamp + 1, priority, vec![], vec![]);
    (a, b)
}

#[test]
fn double_baking_burns_everything_frozen() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(3);
    let (a, b) = double_bake(&sb);
    let cheater = a.header.baker;
    sb.apply(a.clone()).unwrap();
    let evidence = Content::double_baking(a.header.clone(), b.header.clone());
    let op = Operation::unsigned(head_hash(&sb.ctx), vec![evidence.clone()]);
    let frozen_before = sb.ctx.total_frozen(&cheater);
    let burned_before = sb.ctx.supply("burned");
    let block = sb.forge_next(&[op.clone()]);
    assert_eq!(block.operations.len(), 1);
    let cheater_bakes = block.header.baker == cheater;
    let cheater_endorses = block.endorsements.iter().filter(|e| e.delegate == cheater).count() as u64;
    let r = sb.apply(block).unwrap();
    let burned = r.receipts[0].results[0].burned;
    let earned_in_block = if cheater_bakes { 272 * TEZ } else { 0 } + cheater_endorses * 66 * TEZ;
    assert_eq!(burned, frozen_before + earned_in_block);
    assert_eq!(sb.ctx.supply("burned") - burned_before, burned);
    let k = Constants::desk();
    let fees = sb.ctx.total_frozen(&cheater);
    assert_eq!(fees, 0);
    assert!(burned >= k.block_security_deposit + k.block_reward);
    sb.ctx.check_conservation().unwrap();
    sb.ctx.check_staking().unwrap();

    let env = BlockEnv { level: sb.level() + 1, timestamp: head_timestamp(&sb.ctx) + 60 };
    let again = Operation::unsigned(head_hash(&sb.ctx), vec![evidence]);
    assert!(matches!(apply_operation(&sb.ctx, &again, &env, Mode::Real), Err(ProtocolError::AlreadyDenounced { .. })));
    let same = Content::DoubleBaking { bh1: Box::new(a.header.clone()), bh2: Box::new(a.header.clone()) };
    let op = Operation::unsigned(head_hash(&sb.ctx), vec![same]);
    assert!(matches!(apply_operation(&sb.ctx, &op, &env, Mode::Real), Err(ProtocolError::InvalidEvidence(_))));
}

#[test]
fn evidence_from_two_bakers_is_invalid() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(2);
    let a = sb.forge_next(&[]);
    let h = &a.header;
    let other = sb.keys.keys().find(|k| **k != h.baker).copied().unwrap();
    let b = Block::forge(&key_of(&sb, &other), h.level, h.predecessor, h.timestamp, 3, vec![], vec![]);
    sb.apply(a.clone()).unwrap();
    let env = BlockEnv { level: sb.level() + 1, timestamp: head_timestamp(&sb.ctx) + 60 };
    let op = Operation::unsigned(head_hash(&sb.ctx), vec![Content::double_baking(a.header, b.header)]);
    assert!(matches!(apply_operation(&sb.ctx, &op, &env, Mode::Real), Err(ProtocolError::InvalidEvidence(_))));
}

#[test]
fn double_endorsement_is_punished() {
    let mut sb = Sandbox::new(Constants::desk());
    sb.bake_empty(2);
    let d = endorsement_slots(&sb.ctx, 2).unwrap()[0];
    let sk = key_of(&sb, &d);
    let e1 = Endorsement::new(&sk, 2, 0, head_hash(&sb.ctx));
    let e2 = Endorsement::new(&sk, 2, 0, sb.genesis.hash);
    let op = Operation::unsigned(head_hash(&sb.ctx), vec![Content::double_endorsement(e1, e2)]);
    let r = sb.bake(&[op]).unwrap();
    assert_eq!(r.receipts[0].results[0].status, Status::Applied);
    assert!(r.receipts[0].results[0].burned > 0);
    assert_eq!(sb.ctx.total_frozen(&d), 0);
    sb.ctx.check_conservation().unwrap();
}

#[test]
fn fees_go_to_the_baker() {
    let mut sb = Sandbox::new(Constants::desk());
    let sender = bootstrap_keys(1).remove(0);
    let bob = SecretKey::from_label("bob").public_key().address();
    let m = sb.manager(&sender.public_key().address(), 50_000, 10_200, 0);
    let op = sb.sign(&sender, vec![Content::Transaction { m, amount: TEZ, destination: bob, parameters: None }]);
    let r = sb.bake(&[op]).unwrap();
    assert!(r.receipts[0].succeeded());
    let baker = sb.blocks.last().unwrap().header.baker;
    assert_eq!(sb.ctx.frozen(&baker, 0).fees, 50_000);
    assert_eq!(sb.ctx.pending_fees(), 0);
    sb.ctx.check_conservation().unwrap();
}
