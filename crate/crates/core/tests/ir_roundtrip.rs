//! Parse/print round-trip over a generated program corpus.

mod common;

use hotpin::ir::{parse_program, pretty_print};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn parse_print_identity_over_500_random_programs() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    for case in 0..500 {
        let program = common::random_program(&mut rng);
        let printed = pretty_print(&program);
        let reparsed = parse_program(&printed)
            .unwrap_or_else(|e| panic!("case {case}: reparse failed: {e}\n{printed}"));
        assert_eq!(reparsed, program, "case {case} round-trip drift:\n{printed}");
    }
}

#[test]
fn printed_programs_are_stable_under_a_second_round_trip() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    for _ in 0..50 {
        let program = common::random_program(&mut rng);
        let once = pretty_print(&program);
        let twice = pretty_print(&parse_program(&once).unwrap());
        assert_eq!(once, twice);
    }
}
