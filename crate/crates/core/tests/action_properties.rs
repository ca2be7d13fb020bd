use graphreduce::action::{
    beta_star, optimal_action, optimal_action_in, thresholds, ActionSpace, EdgeQuantities, Priority,
    Regime,
};
use graphreduce::oracle::brute_force_action_oracle;
use proptest::prelude::*;

fn quantities() -> impl Strategy<Value = EdgeQuantities> {
    (0.02f64..1.0, -6f64..2.0, 0usize..6, any::<bool>(), any::<bool>()).prop_map(|(x, log_m, tau, nodes, bridge)| {
        let priority = if nodes { Priority::Nodes } else { Priority::Edges };
        let x = if bridge { 1.0 } else { x.min(0.98) };
        EdgeQuantities::new(x, log_m.exp(), tau, priority).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn optimal_action_is_unbiased_and_feasible(eq in quantities(), log_beta in -8f64..4.0) {
        let a = optimal_action(&eq, log_beta.exp()).unwrap();
        prop_assert!(a.mean_f().abs() < 1e-9 * a.mean_f_squared().sqrt().max(1.0));
        prop_assert!(a.p_delete >= 0.0 && a.p_contract >= 0.0 && a.p_reweight >= -1e-15);
        prop_assert!(a.p_delete <= 1.0 - eq.x + 1e-12);
        prop_assert!(a.p_contract <= eq.x + 1e-12);
        prop_assert!((a.p_delete + a.p_contract + a.p_reweight - 1.0).abs() < 1e-12);
        if eq.is_bridge() {
            prop_assert_eq!(a.p_delete, 0.0);
        }
        // The reweight never takes a weight to zero or below.
        prop_assert!(a.reweight > -1.0);
    }

    #[test]
    fn expected_reduction_is_monotone_in_beta(eq in quantities(), log_beta in -8f64..4.0, step in 0.0f64..2.0) {
        let b0 = log_beta.exp();
        let b1 = b0 * (1.0 + step);
        let r0 = optimal_action(&eq, b0).unwrap().expected_reduction(&eq);
        let r1 = optimal_action(&eq, b1).unwrap().expected_reduction(&eq);
        prop_assert!(r1 >= r0 - 1e-12);
    }

    #[test]
    fn minimized_cost_is_continuous_at_thresholds(eq in quantities()) {
        let t = thresholds(&eq);
        for b in [t.beta_1(), t.beta_2] {
            if !b.is_finite() {
                continue;
            }
            let (b_lo, b_hi) = (b * (1.0 - 1e-6), b * (1.0 + 1e-6));
            let lo = optimal_action(&eq, b_lo).unwrap().cost(&eq, b_lo);
            let hi = optimal_action(&eq, b_hi).unwrap().cost(&eq, b_hi);
            // |dC/dbeta| = 2 beta E[r] bounds the change over the step.
            let bound = 2.0 * b_hi * (eq.r_delete() + eq.r_contract()) * (b_hi - b_lo);
            prop_assert!((lo - hi).abs() <= bound * (1.0 + 1e-6) + 1e-12 * eq.m * eq.m);
        }
    }

    #[test]
    fn beta_star_reaches_d(eq in quantities(), d in 0.01f64..2.0) {
        let b = beta_star(&eq, d).unwrap();
        if b.is_finite() {
            let at = optimal_action(&eq, b).unwrap().expected_reduction(&eq);
            prop_assert!(at >= d * (1.0 - 1e-9), "E[r] = {} < d = {}", at, d);
            let below = optimal_action(&eq, b * (1.0 - 1e-6)).unwrap().expected_reduction(&eq);
            prop_assert!(below < d);
        } else {
            let far = optimal_action(&eq, 1e12).unwrap().expected_reduction(&eq);
            prop_assert!(far < d * (1.0 + 1e-9));
        }
    }

    #[test]
    fn deletion_only_space_never_contracts(eq in quantities(), log_beta in -8f64..4.0, rho in 0.1f64..10.0) {
        let a = optimal_action_in(&eq, log_beta.exp(), ActionSpace::DeletionOnly { max_reweight: rho }).unwrap();
        prop_assert_eq!(a.p_contract, 0.0);
        prop_assert!(a.reweight <= rho * (1.0 + 1e-9));
        prop_assert!(a.mean_f().abs() < 1e-9 * a.mean_f_squared().sqrt().max(1.0));
    }
}

#[test]
fn closed_form_beats_a_coarse_grid() {
    let eq = EdgeQuantities::new(0.35, 0.4, 2, Priority::Edges).unwrap();
    for beta in [0.05, 0.3, 0.8, 2.0, 20.0] {
        let closed = optimal_action(&eq, beta).unwrap();
        let grid = brute_force_action_oracle(&eq, beta, 200).unwrap();
        assert!(closed.cost(&eq, beta) <= grid.cost(&eq, beta) + 1e-12);
        if closed.regime == Regime::NoAction {
            assert_eq!(grid.regime, Regime::NoAction);
        }
    }
}
