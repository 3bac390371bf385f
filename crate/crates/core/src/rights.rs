//! Roll snapshots, cycle seeds and the baking/endorsement draws.
//!
//! A draw hashes `seed ‖ level ‖ purpose ‖ index`, reads the first eight
//! bytes as a big-endian integer and picks that roll (modulo the total) in
//! the snapshot, where delegates are laid out in address order.

use std::collections::BTreeMap;

use tzdesk_michelson::Address;

use crate::context::Context;
use crate::crypto::{hash_parts, Hash};
use crate::error::ProtocolError;

pub type Snapshot = Vec<(Address, u64)>;

/// Delegates with at least one roll, in address order.
pub fn current_rolls(ctx: &Context) -> Snapshot {
    let roll = ctx.constants().tokens_per_roll;
    ctx.delegates()
        .into_iter()
        .map(|d| (d, ctx.staking_balance(&d) / roll))
        .filter(|(_, r)| *r > 0)
        .collect()
}

pub fn seed(ctx: &Context, cycle: u64) -> Option<Hash> {
    ctx.get(&["cycle", &cycle.to_string(), "seed"]).map(|b| b.try_into().expect("32-byte seed"))
}

pub fn snapshot(ctx: &Context, cycle: u64) -> Option<Snapshot> {
    let raw: Vec<(String, u64)> = ctx.get_json(&["cycle", &cycle.to_string(), "rolls"])?;
    Some(raw.into_iter().map(|(a, r)| (a.parse().expect("stored address"), r)).collect())
}

/// Fixes the seed and roll distribution that `cycle` will draw from.
pub fn take_snapshot(ctx: &mut Context, cycle: u64, seed: Hash) {
    let rolls: Vec<(String, u64)> = current_rolls(ctx).into_iter().map(|(a, r)| (a.to_string(), r)).collect();
    ctx.set(&["cycle", &cycle.to_string(), "seed"], seed.to_vec());
    ctx.set_json(&["cycle", &cycle.to_string(), "rolls"], &rolls);
}

pub fn next_seed(previous: &Hash, cycle: u64) -> Hash {
    hash_parts(&[previous, &cycle.to_be_bytes()])
}

/// Owner of draw `index` for `purpose` (`b"baking"` or `b"endorsement"`).
pub fn draw(snap: &Snapshot, seed: &Hash, level: u64, purpose: &[u8], index: u16) -> Result<Address, ProtocolError> {
    let total: u64 = snap.iter().map(|(_, r)| r).sum();
    if total == 0 {
        return Err(ProtocolError::NoRolls);
    }
    let h = hash_parts(&[seed, &level.to_be_bytes(), purpose, &index.to_be_bytes()]);
    let mut roll = u64::from_be_bytes(h[..8].try_into().expect("8 bytes")) % total;
    for (d, r) in snap {
        if roll < *r {
            return Ok(*d);
        }
        roll -= r;
    }
    unreachable!("roll index below total")
}

fn cycle_data(ctx: &Context, level: u64) -> Result<(Snapshot, Hash), ProtocolError> {
    let cycle = ctx.constants().cycle_of(level);
    match (snapshot(ctx, cycle), seed(ctx, cycle)) {
        (Some(s), Some(h)) => Ok((s, h)),
        _ => Err(ProtocolError::NoRolls),
    }
}

pub fn baker_at(ctx: &Context, level: u64, priority: u16) -> Result<Address, ProtocolError> {
    let (snap, seed) = cycle_data(ctx, level)?;
    draw(&snap, &seed, level, b"baking", priority)
}

/// Bakers for priorities `0..count`.
pub fn baking_rights(ctx: &Context, level: u64, count: u16) -> Result<Vec<Address>, ProtocolError> {
    let (snap, seed) = cycle_data(ctx, level)?;
    (0..count).map(|p| draw(&snap, &seed, level, b"baking", p)).collect()
}

/// Lowest priority at which `d` may bake at `level`, searching `0..limit`.
pub fn first_priority(ctx: &Context, level: u64, d: &Address, limit: u16) -> Result<Option<u16>, ProtocolError> {
    Ok(baking_rights(ctx, level, limit)?.iter().position(|b| b == d).map(|p| p as u16))
}

/// Owner of every endorsement slot at `level`.
pub fn endorsement_slots(ctx: &Context, level: u64) -> Result<Vec<Address>, ProtocolError> {
    let n = ctx.constants().endorsers_per_block;
    let (snap, seed) = cycle_data(ctx, level)?;
    (0..n).map(|s| draw(&snap, &seed, level, b"endorsement", s)).collect()
}

pub fn endorsement_rights(ctx: &Context, level: u64) -> Result<BTreeMap<Address, Vec<u16>>, ProtocolError> {
    let mut out: BTreeMap<Address, Vec<u16>> = BTreeMap::new();
    for (slot, d) in endorsement_slots(ctx, level)?.into_iter().enumerate() {
        out.entry(d).or_default().push(slot as u16);
    }
    Ok(out)
}
