use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tzdesk_core::apply::Status;
use tzdesk_core::testkit::{no_nested_frames, CallTreeWorld};
use tzdesk_core::{apply_operation, BlockEnv, Mode};

#[test]
fn thousand_random_call_trees_never_nest_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut applied, mut failed, mut deepest) = (0, 0, 0);
    for _ in 0..10 {
        let mut world = CallTreeWorld::new(&mut rng, 8);
        let env = BlockEnv { level: world.sandbox.level() + 1, timestamp: 1_557_187_200 + 3600 };
        for _ in 0..100 {
            let op = world.random_call(&mut rng);
            let a = apply_operation(&world.sandbox.ctx, &op, &env, Mode::Real).expect("call is includable");
            assert!(no_nested_frames(&a.trace), "nested frames: {:?}", a.trace);
            a.ctx.check_conservation().unwrap();
            let r = &a.receipt.results[0];
            match r.status {
                Status::Applied => applied += 1,
                _ => failed += 1,
            }
            deepest = deepest.max(r.internal.len());
            world.sandbox.ctx = a.ctx;
        }
    }
    assert_eq!(applied + failed, 1000);
    assert!(applied > 100 && failed > 10, "applied {applied}, failed {failed}");
    assert!(deepest > 3);
}
