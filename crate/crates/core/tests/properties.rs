//! Randomized property suites over the core numeric kernels: simplex
//! preservation, the eps-best-response loss bound, potential/equilibrium
//! equivalence, optimistic-value dominance, and channel likelihood totals.

mod common;

use proptest::prelude::*;

const CASES: u32 = 1000;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn simplex_preservation(
        prior in prop::collection::vec(1e-3..1.0f64, 3),
        observed in 0usize..3,
        assumed_eps in 0.0..0.6f64,
        alpha_t in 1u64..500,
        use_bayes in any::<bool>(),
    ) {
        let res = common::prop_simplex_preservation(&prior, observed, assumed_eps, alpha_t, use_bayes);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn state_belief_update_preserves_simplex(
        belief in prop::collection::vec(1e-3..1.0f64, 3),
        own in 0usize..2,
        opp in prop::collection::vec(1e-3..1.0f64, 2),
        targets in prop::collection::vec(0usize..3, 3 * 4),
    ) {
        let res = common::prop_state_belief_simplex(&belief, own, &opp, &targets);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn epsilon_best_response_delta_bound(
        payoffs in prop::collection::vec(-10.0..10.0f64, 2 * 9),
        profile0 in prop::collection::vec(1e-3..1.0f64, 3),
        profile1 in prop::collection::vec(1e-3..1.0f64, 3),
        eps in 0.0..0.9f64,
    ) {
        let res = common::prop_eps_br_bound(&payoffs, &profile0, &profile1, eps);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn potential_local_maxima_are_pure_nash(
        potential in prop::collection::vec(-5..=5i32, 9),
        dummy0 in prop::collection::vec(-5..=5i32, 3),
        dummy1 in prop::collection::vec(-5..=5i32, 3),
    ) {
        let res = common::prop_potential_maxima(&potential, &dummy0, &dummy1);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn v_opt_dominates_v_star(
        payoffs in prop::collection::vec(-10.0..10.0f64, 2 * 4),
        child in prop::collection::vec(-20.0..20.0f64, 2),
        targets in prop::collection::vec(0usize..2, 2 * 4),
        opp in prop::collection::vec(1e-3..1.0f64, 2),
        d in 0usize..3,
    ) {
        let res = common::prop_v_opt_dominates(&payoffs, &child, &targets, &opp, d);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn channel_likelihood_row_sums(
        eps in 0.0..1.0f64,
        num_actions in 2usize..6,
    ) {
        let res = common::prop_likelihood_rows(eps, num_actions);
        prop_assert!(res.is_ok(), "{:?}", res);
    }
}
