//! The four-period amendment procedure: proposal, exploration, testing,
//! promotion. Votes are weighted by the rolls each delegate held when the
//! period started.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use tzdesk_michelson::Address;

use crate::constants::Constants;
use crate::context::Context;
use crate::crypto::{hash_parts, ProtocolHash};
use crate::error::ProtocolError;
use crate::operation::Vote;
use crate::rights::current_rolls;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodKind {
    Proposal,
    Exploration,
    Testing,
    Promotion,
}

impl PeriodKind {
    pub fn name(self) -> &'static str {
        match self {
            PeriodKind::Proposal => "proposal",
            PeriodKind::Exploration => "exploration",
            PeriodKind::Testing => "testing",
            PeriodKind::Promotion => "promotion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingState {
    pub index: u32,
    pub kind: PeriodKind,
    pub start_level: u64,
    pub listings: BTreeMap<Address, u64>,
    /// Support in rolls per proposal.
    pub proposals: BTreeMap<ProtocolHash, u64>,
    pub supporters: BTreeSet<(Address, ProtocolHash)>,
    pub ballots: BTreeMap<Address, Vote>,
    pub current_proposal: Option<ProtocolHash>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub yay: u64,
    pub nay: u64,
    pub pass: u64,
}

impl Tally {
    /// Supermajority among non-pass ballots; no quorum.
    pub fn adopted(&self, percent: u64) -> bool {
        let cast = self.yay as u128 + self.nay as u128;
        cast > 0 && self.yay as u128 * 100 >= percent as u128 * cast
    }
}

impl VotingState {
    pub fn fresh(ctx: &Context, index: u32, kind: PeriodKind, start_level: u64, current: Option<ProtocolHash>) -> VotingState {
        VotingState {
            index,
            kind,
            start_level,
            listings: current_rolls(ctx).into_iter().collect(),
            proposals: BTreeMap::new(),
            supporters: BTreeSet::new(),
            ballots: BTreeMap::new(),
            current_proposal: current,
        }
    }

    pub fn load(ctx: &Context) -> VotingState {
        ctx.get_json(&["votes", "state"]).expect("voting state is set at genesis")
    }

    pub fn store(&self, ctx: &mut Context) {
        ctx.set_json(&["votes", "state"], self);
    }

    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        for (d, v) in &self.ballots {
            let w = self.listings.get(d).copied().unwrap_or(0);
            match v {
                Vote::Yay => t.yay += w,
                Vote::Nay => t.nay += w,
                Vote::Pass => t.pass += w,
            }
        }
        t
    }

    /// Most supported proposal; ties go to the smallest hash.
    pub fn winner(&self) -> Option<ProtocolHash> {
        self.proposals.iter().fold(None, |best: Option<(ProtocolHash, u64)>, (h, s)| match best {
            Some((_, bs)) if bs >= *s => best,
            _ => Some((*h, *s)),
        })
        .map(|(h, _)| h)
    }
}

/// A parameter change that a protocol hash stands for once adopted.
pub struct Amendment {
    pub name: &'static str,
    pub apply: fn(&mut Constants),
}

pub fn amendment_hash(name: &str) -> ProtocolHash {
    ProtocolHash(hash_parts(&[b"tzdesk amendment ", name.as_bytes()]))
}

pub fn known_amendments() -> Vec<(ProtocolHash, Amendment)> {
    vec![(
        amendment_hash("roll-8000"),
        Amendment { name: "roll-8000", apply: |c| c.tokens_per_roll = 8_000 * crate::constants::MUTEZ_PER_TEZ },
    )]
}

pub fn genesis_protocol() -> ProtocolHash {
    ProtocolHash(hash_parts(&[b"tzdesk genesis protocol"]))
}

pub fn protocol(ctx: &Context) -> ProtocolHash {
    ctx.get(&["protocol", "hash"]).map(|b| ProtocolHash(b.try_into().expect("32 bytes"))).unwrap_or_else(genesis_protocol)
}

pub fn pending_protocol(ctx: &Context) -> Option<ProtocolHash> {
    ctx.get(&["protocol", "pending"]).map(|b| ProtocolHash(b.try_into().expect("32 bytes")))
}

/// Switches to an adopted amendment. Called at cycle boundaries.
pub fn activate_pending(ctx: &mut Context) -> Option<ProtocolHash> {
    let p = pending_protocol(ctx)?;
    ctx.del(&["protocol", "pending"]);
    ctx.set(&["protocol", "hash"], p.0.to_vec());
    if let Some((_, a)) = known_amendments().into_iter().find(|(h, _)| *h == p) {
        let mut c = ctx.constants();
        (a.apply)(&mut c);
        ctx.set_constants(&c);
    }
    Some(p)
}

fn check_period(st: &VotingState, period: u32) -> Result<(), ProtocolError> {
    if period != st.index {
        return Err(ProtocolError::WrongVotingPeriod { current: st.index, found: period });
    }
    Ok(())
}

pub fn apply_proposals(ctx: &mut Context, source: &Address, period: u32, proposals: &[ProtocolHash]) -> Result<(), ProtocolError> {
    let mut st = VotingState::load(ctx);
    check_period(&st, period)?;
    if st.kind != PeriodKind::Proposal {
        return Err(ProtocolError::WrongPeriodKind(st.kind.name()));
    }
    let rolls = *st.listings.get(source).ok_or(ProtocolError::NotInListings(*source))?;
    for p in proposals {
        if !st.supporters.insert((*source, *p)) {
            return Err(ProtocolError::DuplicateVote(*source));
        }
        *st.proposals.entry(*p).or_default() += rolls;
    }
    st.store(ctx);
    Ok(())
}

pub fn apply_ballot(ctx: &mut Context, source: &Address, period: u32, proposal: &ProtocolHash, ballot: Vote) -> Result<(), ProtocolError> {
    let mut st = VotingState::load(ctx);
    check_period(&st, period)?;
    if !matches!(st.kind, PeriodKind::Exploration | PeriodKind::Promotion) {
        return Err(ProtocolError::WrongPeriodKind(st.kind.name()));
    }
    if st.current_proposal != Some(*proposal) {
        return Err(ProtocolError::WrongProposal);
    }
    if !st.listings.contains_key(source) {
        return Err(ProtocolError::NotInListings(*source));
    }
    if st.ballots.insert(*source, ballot).is_some() {
        return Err(ProtocolError::DuplicateVote(*source));
    }
    st.store(ctx);
    Ok(())
}

/// Closes the period ending at `level` and opens the next one.
pub fn voting_step(ctx: &mut Context, level: u64) {
    let st = VotingState::load(ctx);
    let pct = ctx.constants().supermajority_percent;
    let (kind, current) = match st.kind {
        PeriodKind::Proposal => match st.winner() {
            Some(w) => (PeriodKind::Exploration, Some(w)),
            None => (PeriodKind::Proposal, None),
        },
        PeriodKind::Exploration if st.tally().adopted(pct) => (PeriodKind::Testing, st.current_proposal),
        PeriodKind::Exploration => (PeriodKind::Proposal, None),
        PeriodKind::Testing => (PeriodKind::Promotion, st.current_proposal),
        PeriodKind::Promotion => {
            if st.tally().adopted(pct) {
                if let Some(p) = st.current_proposal {
                    ctx.set(&["protocol", "pending"], p.0.to_vec());
                }
            }
            (PeriodKind::Proposal, None)
        }
    };
    VotingState::fresh(ctx, st.index + 1, kind, level + 1, current).store(ctx);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supermajority_threshold() {
        assert!(Tally { yay: 80, nay: 20, pass: 0 }.adopted(80));
        assert!(!Tally { yay: 79, nay: 21, pass: 0 }.adopted(80));
        assert!(Tally { yay: 4, nay: 1, pass: 1000 }.adopted(80));
        assert!(!Tally { yay: 0, nay: 0, pass: 5 }.adopted(80));
    }

    #[test]
    fn winner_tie_break() {
        let mut st = VotingState {
            index: 0,
            kind: PeriodKind::Proposal,
            start_level: 1,
            listings: BTreeMap::new(),
            proposals: BTreeMap::new(),
            supporters: BTreeSet::new(),
            ballots: BTreeMap::new(),
            current_proposal: None,
        };
        assert_eq!(st.winner(), None);
        let (a, b) = (ProtocolHash([1; 32]), ProtocolHash([2; 32]));
        st.proposals.insert(b, 5);
        st.proposals.insert(a, 5);
        assert_eq!(st.winner(), Some(a));
        st.proposals.insert(b, 6);
        assert_eq!(st.winner(), Some(b));
    }
}
