//! Tez amounts as typed on the command line and printed back.

use tzdesk_core::MUTEZ_PER_TEZ;

/// Parses `"1"`, `"0.005"` or `"1000.000001"` into mutez, exactly.
pub fn parse_tez(s: &str) -> Option<u64> {
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if whole.is_empty() && frac.is_empty() || frac.len() > 6 {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let frac: u64 = if frac.is_empty() { 0 } else { format!("{frac:0<6}").parse().ok()? };
    whole.checked_mul(MUTEZ_PER_TEZ)?.checked_add(frac)
}

/// Six decimals: `1000.000000`.
pub fn format_tez(mutez: u64) -> String {
    format!("{}.{:06}", mutez / MUTEZ_PER_TEZ, mutez % MUTEZ_PER_TEZ)
}

/// Shortest form that parses back: `0.05`, `1`.
pub fn short_tez(mutez: u64) -> String {
    let s = format_tez(mutez);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_the_amounts_of_the_walkthroughs() {
        assert_eq!(parse_tez("1"), Some(1_000_000));
        assert_eq!(parse_tez("0.05"), Some(50_000));
        assert_eq!(parse_tez("0.005"), Some(5_000));
        assert_eq!(parse_tez("0.001"), Some(1_000));
        assert_eq!(parse_tez(".5"), Some(500_000));
        assert_eq!(parse_tez("0.0000001"), None);
        assert_eq!(parse_tez("-1"), None);
        assert_eq!(parse_tez("1e3"), None);
        assert_eq!(parse_tez("."), None);
        assert_eq!(parse_tez(""), None);
        assert_eq!(parse_tez("99999999999999999999"), None);
    }

    #[test]
    fn formats_with_six_decimals() {
        assert_eq!(format_tez(1_000_000_000), "1000.000000");
        assert_eq!(format_tez(1_269), "0.001269");
        assert_eq!(format_tez(0), "0.000000");
        assert_eq!(short_tez(50_000), "0.05");
        assert_eq!(short_tez(1_000_000), "1");
        assert_eq!(short_tez(0), "0");
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(m in 0u64..u64::MAX / 2) {
            prop_assert_eq!(parse_tez(&format_tez(m)), Some(m));
            prop_assert_eq!(parse_tez(&short_tez(m)), Some(m));
        }
    }
}
