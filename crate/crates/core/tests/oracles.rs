//! Independent brute-force oracles for the analysis routines: equilibrium
//! enumeration, potential reconstruction, p-dominance, and the depth-limited
//! lookahead values.

mod common;

#[test]
fn matrix_analysis_matches_brute_force_oracles_on_200_games() {
    common::check_matrix_oracles(200).unwrap();
}

#[test]
fn lookahead_matches_dp_oracle_on_toy_fixture() {
    common::check_lookahead_toy().unwrap();
}

#[test]
fn select_action_matches_dp_oracle_on_random_fixtures() {
    common::check_lookahead_random(20).unwrap();
}
