//! Contracts shipped with the toolchain.

pub const VOTE: &str = include_str!("../contracts/vote.tz");
pub const ORACLE: &str = include_str!("../contracts/oracle.tz");
pub const INSURANCE: &str = include_str!("../contracts/insurance.tz");

pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "vote" => Some(VOTE),
        "oracle" => Some(ORACLE),
        "insurance" => Some(INSURANCE),
        _ => None,
    }
}
