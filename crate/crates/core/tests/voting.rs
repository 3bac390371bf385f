use tzdesk_core::block::SANDBOX_GENESIS_TIME;
use tzdesk_core::crypto::SecretKey;
use tzdesk_core::rights::snapshot;
use tzdesk_core::testkit::{run_amendment_vote, vote_world};
use tzdesk_core::voting::{amendment_hash, protocol, PeriodKind, VotingState};
use tzdesk_core::{Content, Operation, ProtocolError, Vote};

const TEZ: u64 = 1_000_000;

#[test]
fn eighty_percent_adopts_the_roll_change() {
    let (sb, kinds) = run_amendment_vote(80, 20);
    sb.ctx.check_conservation().unwrap();
    assert_eq!(kinds, vec![PeriodKind::Exploration, PeriodKind::Testing, PeriodKind::Promotion, PeriodKind::Proposal]);
    assert_eq!(sb.level(), 32);
    assert_eq!(sb.ctx.constants().tokens_per_roll, 8_000 * TEZ);
    assert_eq!(protocol(&sb.ctx), amendment_hash("roll-8000"));
    let y = SecretKey::from_label("yay-delegate").public_key().address();
    assert_eq!(sb.ctx.rolls_of(&y).unwrap(), sb.ctx.staking_balance(&y) / (8_000 * TEZ));
    assert_eq!(sb.ctx.rolls_of(&y).unwrap(), 100);
    let before: u64 = snapshot(&sb.history[16], 1).unwrap().iter().map(|(_, r)| r).sum();
    let after: u64 = snapshot(&sb.ctx, 2).unwrap().iter().map(|(_, r)| r).sum();
    assert_eq!(before, 100);
    assert_eq!(after, 125);
    assert_eq!(sb.history[31].constants().tokens_per_roll, 10_000 * TEZ);
}

#[test]
fn seventy_nine_percent_is_rejected() {
    let (sb, kinds) = run_amendment_vote(79, 21);
    assert_eq!(kinds[0], PeriodKind::Exploration);
    assert_eq!(kinds[1], PeriodKind::Proposal);
    assert_eq!(sb.ctx.constants().tokens_per_roll, 10_000 * TEZ);
    let y = SecretKey::from_label("yay-delegate").public_key().address();
    assert_eq!(sb.ctx.rolls_of(&y).unwrap(), 79);
}

#[test]
fn empty_proposal_period_restarts() {
    let (mut sb, _, _) = vote_world(50, 50);
    sb.bake_empty(8);
    let st = VotingState::load(&sb.ctx);
    assert_eq!((st.kind, st.index, st.start_level), (PeriodKind::Proposal, 1, 9));
}

#[test]
fn vote_operation_checks() {
    let (sb, y, n) = vote_world(50, 50);
    let stranger = SecretKey::from_label("stranger");
    let p = amendment_hash("roll-8000");
    let env = tzdesk_core::BlockEnv { level: 1, timestamp: SANDBOX_GENESIS_TIME + 60 };
    let apply = |op: &Operation| tzdesk_core::apply_operation(&sb.ctx, op, &env, tzdesk_core::Mode::Real).map(|_| ());
    let c = Content::Ballot { source: y.public_key().address(), period: 0, proposal: p, ballot: Vote::Yay };
    assert_eq!(apply(&sb.sign(&y, vec![c])), Err(ProtocolError::WrongPeriodKind("proposal")));
    let wrong = Content::Proposals { source: y.public_key().address(), period: 1, proposals: vec![p] };
    assert!(matches!(apply(&sb.sign(&y, vec![wrong])), Err(ProtocolError::WrongVotingPeriod { .. })));
    let twice = Content::Proposals { source: n.public_key().address(), period: 0, proposals: vec![p, p] };
    assert!(matches!(apply(&sb.sign(&n, vec![twice])), Err(ProtocolError::DuplicateVote(_))));
    let forged = Content::Proposals { source: n.public_key().address(), period: 0, proposals: vec![p] };
    assert_eq!(apply(&sb.sign(&y, vec![forged])), Err(ProtocolError::InvalidSignature));
    let outsider = Content::Proposals { source: stranger.public_key().address(), period: 0, proposals: vec![p] };
    assert!(apply(&sb.sign(&stranger, vec![outsider])).is_err());
}
