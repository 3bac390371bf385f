//! Generators for property tests over contract call trees.
//!
//! A router contract holds three target addresses. Called with `Left n`
//! and `n > 0`, it emits one transfer per configured edge, passing
//! `Left (n - dec)` to routers and `Unit` to implicit accounts. `Right`
//! replaces the targets.

use rand::Rng;
use tzdesk_michelson::syntax::Node;
use tzdesk_michelson::{parse_program, Address};

use crate::apply::Frame;
use crate::block::{BootstrapAccount, GenesisParams, SANDBOX_GENESIS_TIME};
use crate::constants::Constants;
use crate::crypto::SecretKey;
use crate::operation::{Content, Operation, Script, Vote};
use crate::sandbox::Sandbox;
use crate::voting::{amendment_hash, PeriodKind, VotingState};

#[derive(Debug, Clone)]
pub struct RouterSpec {
    /// (target index 0..3, depth decrement)
    pub edges: Vec<(u8, i64)>,
    pub fail_at: Option<i64>,
}

const ROUTER_TY: &str = "(or int (pair address (pair address address)))";

/// Copies the fourth stack element to the top.
const COPY_4: &str = "DIP { DIP { DIP { DUP }; SWAP }; SWAP }; SWAP";

pub fn router_source(spec: &RouterSpec) -> String {
    let mut emits = String::new();
    for (target, dec) in &spec.edges {
        let select = match target {
            0 => "CAR",
            1 => "CDR; CAR",
            _ => "CDR; CDR",
        };
        emits.push_str(&format!(
            "DIP {{ DUP }}; SWAP; PUSH int {dec}; SWAP; SUB;
             {COPY_4}; {select};
             DUP; CONTRACT {ROUTER_TY};
             IF_NONE
               {{ CONTRACT unit; IF_NONE {{ PUSH string \"no target\"; FAILWITH }} {{}};
                  PUSH mutez 0; UNIT; TRANSFER_TOKENS; DIP {{ DROP }} }}
               {{ DIP {{ DROP }}; PUSH mutez 0; DIP {{ SWAP }}; SWAP;
                  LEFT (pair address (pair address address)); TRANSFER_TOKENS }};
             CONS;
             "
        ));
    }
    let fail = match spec.fail_at {
        Some(f) => format!("DUP; PUSH int {f}; COMPARE; EQ; IF {{ PUSH string \"boom\"; FAILWITH }} {{}};"),
        None => String::new(),
    };
    format!(
        "parameter {ROUTER_TY};
storage (pair address (pair address address));
code {{ DUP; CDR; SWAP; CAR;
       IF_LEFT
         {{ {fail}
           DUP; PUSH int 0; COMPARE; LT;
           IF {{ NIL operation; {emits} DIP {{ DROP }}; PAIR }}
              {{ DROP; NIL operation; PAIR }} }}
         {{ DIP {{ DROP }}; NIL operation; PAIR }} }}"
    )
}

pub fn random_router(rng: &mut impl Rng) -> RouterSpec {
    let n = rng.gen_range(0..=3);
    RouterSpec {
        edges: (0..n).map(|_| (rng.gen_range(0..3u8), rng.gen_range(1..=2i64))).collect(),
        fail_at: rng.gen_bool(0.2).then(|| rng.gen_range(0..3i64)),
    }
}

/// True when no contract is entered while one of its own frames is live.
pub fn no_nested_frames(trace: &[Frame]) -> bool {
    let mut live: Vec<Address> = Vec::new();
    for f in trace {
        match f {
            Frame::Enter(a) => {
                if live.contains(a) {
                    return false;
                }
                live.push(*a);
            }
            Frame::Exit(a) => {
                if live.pop() != Some(*a) {
                    return false;
                }
            }
        }
    }
    live.is_empty()
}

fn script_of(src: &str, storage: &str) -> Script {
    let raw = parse_program(src).expect("generated router parses");
    Script { code: Node::seq(raw.to_nodes()), storage: tzdesk_michelson::syntax::parse_expr(storage).expect("storage literal") }
}

/// A sandbox holding `n` routers wired to random targets (other routers,
/// themselves, or an implicit account).
pub struct CallTreeWorld {
    pub sandbox: Sandbox,
    pub routers: Vec<Address>,
    pub caller: SecretKey,
}

impl CallTreeWorld {
    pub fn new(rng: &mut impl Rng, n: usize) -> CallTreeWorld {
        let mut sb = Sandbox::new(Constants::desk());
        let caller = crate::block::bootstrap_keys(1).remove(0);
        let me = caller.public_key().address();
        let mut contents = Vec::new();
        for i in 0..n {
            let src = router_source(&random_router(rng));
            let storage = format!("Pair \"{me}\" (Pair \"{me}\" \"{me}\")");
            let mut m = sb.manager(&me, 100_000, 100_000, 10_000);
            m.counter += i as u64;
            contents.push(Content::Origination { m, balance: 0, delegate: None, script: script_of(&src, &storage) });
        }
        let op = sb.sign(&caller, contents);
        let r = sb.bake(&[op]).expect("origination block");
        let routers: Vec<Address> = r.receipts[0].results.iter().flat_map(|x| x.originated.clone()).collect();
        assert_eq!(routers.len(), n, "routers originated: {:?}", r.receipts[0].results);
        let mut contents = Vec::new();
        for (i, a) in routers.iter().enumerate() {
            let mut pick = || if rng.gen_bool(0.15) { me } else { routers[rng.gen_range(0..n)] };
            let (x, y, z) = (pick(), pick(), pick());
            let arg = tzdesk_michelson::syntax::parse_expr(&format!("Right (Pair \"{x}\" (Pair \"{y}\" \"{z}\"))")).expect("literal");
            let mut m = sb.manager(&me, 100_000, 100_000, 1_000);
            m.counter += i as u64;
            contents.push(Content::Transaction { m, amount: 0, destination: *a, parameters: Some(arg) });
        }
        let op = sb.sign(&caller, contents);
        let r = sb.bake(&[op]).expect("wiring block");
        assert!(r.receipts[0].succeeded(), "wiring failed: {:?}", r.receipts[0].results);
        CallTreeWorld { sandbox: sb, routers, caller }
    }

    /// A signed call of a random router with a random depth.
    pub fn random_call(&self, rng: &mut impl Rng) -> crate::operation::Operation {
        let me = self.caller.public_key().address();
        let dest = self.routers[rng.gen_range(0..self.routers.len())];
        let depth = rng.gen_range(0..=4);
        let arg = tzdesk_michelson::syntax::parse_expr(&format!("Left {depth}")).expect("literal");
        let m = self.sandbox.manager(&me, 50_000, 400_000, 1_000);
        self.sandbox.sign(&self.caller, vec![Content::Transaction { m, amount: 0, destination: dest, parameters: Some(arg) }])
    }
}

const TEZ: u64 = crate::constants::MUTEZ_PER_TEZ;

/// Two delegates, `yay-delegate` and `nay-delegate`, holding the given
/// numbers of rolls on desk constants.
pub fn vote_world(yay_rolls: u64, nay_rolls: u64) -> (Sandbox, SecretKey, SecretKey) {
    let (y, n) = (SecretKey::from_label("yay-delegate"), SecretKey::from_label("nay-delegate"));
    let params = GenesisParams {
        constants: Constants::desk(),
        accounts: vec![
            BootstrapAccount { public_key: y.public_key(), balance: yay_rolls * 10_000 * TEZ, delegate: true },
            BootstrapAccount { public_key: n.public_key(), balance: nay_rolls * 10_000 * TEZ, delegate: true },
        ],
        timestamp: SANDBOX_GENESIS_TIME,
        chain_name: "vote".into(),
    };
    let sb = Sandbox::with_params(&params, vec![y.clone(), n.clone()]).expect("vote genesis");
    (sb, y, n)
}

fn ballot(sb: &Sandbox, sk: &SecretKey, vote: Vote) -> Operation {
    let st = VotingState::load(&sb.ctx);
    let proposal = st.current_proposal.expect("a proposal under vote");
    sb.sign(sk, vec![Content::Ballot { source: sk.public_key().address(), period: st.index, proposal, ballot: vote }])
}

fn bake_until_period_end(sb: &mut Sandbox) {
    let len = sb.ctx.constants().blocks_per_voting_period;
    while sb.level() % len != 0 {
        sb.bake(&[]).expect("empty block applies");
    }
}

/// Proposes `roll-8000` in the first period, then has the yay delegate vote
/// yay and the nay delegate vote nay in every ballot period. Returns the
/// sandbox after four periods and the kind entered at each boundary.
pub fn run_amendment_vote(yay_rolls: u64, nay_rolls: u64) -> (Sandbox, Vec<PeriodKind>) {
    let (mut sb, y, n) = vote_world(yay_rolls, nay_rolls);
    let mut kinds = vec![];
    let p = amendment_hash("roll-8000");
    let prop = sb.sign(&y, vec![Content::Proposals { source: y.public_key().address(), period: 0, proposals: vec![p] }]);
    let r = sb.bake(&[prop]).expect("proposal block");
    assert_eq!(r.receipts.len(), 1, "proposal included");
    bake_until_period_end(&mut sb);
    kinds.push(VotingState::load(&sb.ctx).kind);
    for _ in 0..3 {
        let st = VotingState::load(&sb.ctx);
        if matches!(st.kind, PeriodKind::Exploration | PeriodKind::Promotion) {
            let ops = [ballot(&sb, &y, Vote::Yay), ballot(&sb, &n, Vote::Nay)];
            let r = sb.bake(&ops).expect("ballot block");
            assert_eq!(r.receipts.len(), 2, "ballots included");
        } else {
            sb.bake(&[]).expect("empty block applies");
        }
        bake_until_period_end(&mut sb);
        kinds.push(VotingState::load(&sb.ctx).kind);
    }
    (sb, kinds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routers_typecheck() {
        let spec = RouterSpec { edges: vec![(0, 1), (1, 2), (2, 1)], fail_at: Some(1) };
        tzdesk_michelson::load(&router_source(&spec)).unwrap();
        tzdesk_michelson::load(&router_source(&RouterSpec { edges: vec![], fail_at: None })).unwrap();
    }

    #[test]
    fn frame_checker() {
        let (a, b) = (Address::originated([1; 20]), Address::originated([2; 20]));
        assert!(no_nested_frames(&[Frame::Enter(a), Frame::Exit(a), Frame::Enter(a), Frame::Exit(a)]));
        assert!(!no_nested_frames(&[Frame::Enter(a), Frame::Enter(b), Frame::Enter(a)]));
    }
}
