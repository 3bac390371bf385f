use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tzdesk_node::identity::{generate_identity, stamp_bits};

/// Tries to reach 8 zero bits are geometric with p = 1/256: mean 256,
/// median 256·ln 2 ≈ 177. Bounds are about four standard errors wide.
#[test]
fn difficulty_eight_work_matches_the_geometric_law() {
    let mut tries: Vec<u64> = (0..400)
        .map(|seed| {
            let (id, t) = generate_identity(&mut ChaCha8Rng::seed_from_u64(seed), 8).unwrap();
            assert!(stamp_bits(&id.public_key, id.proof_of_work_stamp) >= 8);
            id.verify(8).unwrap();
            t
        })
        .collect();
    tries.sort_unstable();
    let mean = tries.iter().sum::<u64>() as f64 / tries.len() as f64;
    let median = tries[tries.len() / 2] as f64;
    assert!((205.0..=307.0).contains(&mean), "mean {mean}");
    assert!((130.0..=225.0).contains(&median), "median {median}");
}
