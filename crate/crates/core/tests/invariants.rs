mod common;

use common::invariants::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn monotone_injections_sandwich_prop(shape in 0u8..3, cells in 1usize..4, finest in 1usize..3, seed: u64) {
        monotone_injections_sandwich(shape, cells, finest, seed);
    }

    #[test]
    fn monotone_injection_sign_rules_prop(shape in 0u8..3, cells in 1usize..4, seed: u64) {
        monotone_injection_sign_rules(shape, cells, seed);
    }

    #[test]
    fn restriction_is_dual_to_prolongation_prop(shape in 0u8..3, cells in 1usize..5, seed: u64) {
        restriction_is_dual_to_prolongation(shape, cells, seed);
    }

    #[test]
    fn ladder_ordering_and_telescoping_prop(shape in 0u8..3, cells in 1usize..4, finest in 1usize..4, seed: u64) {
        ladder_ordering_and_telescoping(shape, cells, finest, seed);
    }

    #[test]
    fn clamp_gives_admissible_idempotent_prop(seed: u64, n in 1usize..30) {
        clamp_gives_admissible_idempotent(seed, n);
    }
}

#[test]
fn downward_sums_stay_admissible_holds() {
    downward_sums_stay_admissible();
}

#[test]
fn upward_sums_stay_admissible_holds() {
    upward_sums_stay_admissible();
}

#[test]
fn bilateral_decomposition_can_leave_downward_set_holds() {
    bilateral_decomposition_can_leave_downward_set();
}

#[test]
fn semi_smooth_zero_set_matches_enumeration_holds() {
    semi_smooth_zero_set_matches_enumeration();
}

#[test]
fn coarse_solve_matches_enumeration_holds() {
    coarse_solve_matches_enumeration();
}

#[test]
fn jacobians_match_finite_differences_holds() {
    jacobians_match_finite_differences();
}

#[test]
fn operators_are_monotone_on_samples_holds() {
    operators_are_monotone_on_samples();
}
