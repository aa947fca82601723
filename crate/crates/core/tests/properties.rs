use proptest::prelude::*;

use market_trust::game::{self, ActionProfile, GameKind, GameSpec};
use market_trust::pareto;
use market_trust::solvers::{self, SolverConfig};

fn arb_game() -> impl Strategy<Value = GameSpec> {
    prop_oneof![
        proptest::collection::vec(2.0f64..30.0, 2..6).prop_map(|b| GameSpec::cournot(b).unwrap()),
        (0.5f64..3.0, proptest::collection::vec(0.5f64..5.0, 2..6)).prop_map(|(c, v)| GameSpec::kelly(c, v).unwrap()),
    ]
}

/// Game with agent index, opponent actions and (θ, γ).
fn arb_situation() -> impl Strategy<Value = (GameSpec, usize, Vec<f64>, f64, f64)> {
    arb_game().prop_flat_map(|g| {
        let n = g.n_agents();
        let hi = match g.kind() {
            GameKind::Cournot => g.max_param() / n as f64,
            GameKind::Kelly => g.max_param() * g.capacity() / n as f64,
        };
        (Just(g), 0..n, proptest::collection::vec(0.01 * hi..hi, n - 1), 0.0f64..=1.0, 0.0f64..3.0)
    })
}

fn insert(opponents: &[f64], i: usize, x: f64) -> ActionProfile {
    let mut v = opponents.to_vec();
    v.insert(i, x);
    ActionProfile::new(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn best_response_beats_every_grid_action((g, i, opp, _, _) in arb_situation()) {
        let others: f64 = opp.iter().sum();
        let br = solvers::best_response(&g, i, others).unwrap();
        let at = |x: f64| game::payoff(&g, &insert(&opp, i, x), i).unwrap();
        let best = at(br);
        let top = 2.0 * g.max_param() * g.capacity();
        for k in 0..=400 {
            let x = top * k as f64 / 400.0;
            if x == 0.0 && g.kind() == GameKind::Kelly && others == 0.0 {
                continue;
            }
            prop_assert!(at(x) <= best + 1e-9 * best.abs().max(1.0), "x = {x} beats br = {br}");
        }
    }

    #[test]
    fn generalized_response_reduces_to_best_response((g, i, opp, _, _) in arb_situation()) {
        let config = SolverConfig::default();
        let others: f64 = opp.iter().sum();
        let gbr = solvers::generalized_best_response(&g, i, &opp, 0.0, 0.0, &config).unwrap();
        prop_assert_eq!(gbr, solvers::best_response(&g, i, others).unwrap());
        let p = insert(&opp, i, gbr);
        prop_assert_eq!(game::generalized_payoff(&g, &p, i, 0.0, 0.0).unwrap(), game::payoff(&g, &p, i).unwrap());
    }

    #[test]
    fn generalized_response_solves_the_first_order_condition((g, i, opp, theta, gamma) in arb_situation()) {
        let config = SolverConfig::default();
        let x = solvers::generalized_best_response(&g, i, &opp, theta, gamma, &config).unwrap();
        let residual = game::first_order_residual(&g, &insert(&opp, i, x), i, theta, gamma).unwrap();
        if x > 0.0 {
            prop_assert!(residual.abs() <= 1e-7 * g.max_param().max(1.0), "x = {x}, residual {residual}");
        } else {
            prop_assert!(residual <= 1e-9, "corner with positive residual {residual}");
        }
        // ...and maximizes the generalized payoff, which is concave in the own action.
        let value = |y: f64| game::generalized_payoff(&g, &insert(&opp, i, y), i, theta, gamma).unwrap();
        let best = value(x);
        for y in [x * 0.9, x * 1.1, x + 0.01, (x - 0.01).max(1e-9)] {
            prop_assert!(value(y) <= best + 1e-9 * best.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nash_is_a_fixed_point_and_matches_iteration(g in arb_game()) {
        let config = SolverConfig::default();
        let closed = solvers::nash_equilibrium(&g, &config).unwrap();
        let iterated = solvers::nash_by_iteration(&g, &config).unwrap();
        for i in 0..g.n_agents() {
            prop_assert!((closed.actions()[i] - iterated.actions()[i]).abs() <= 1e-8,
                "agent {i}: {} vs {}", closed.actions()[i], iterated.actions()[i]);
            let br = solvers::best_response(&g, i, closed.others_total(i));
            if let Ok(br) = br {
                prop_assert!((br - closed.actions()[i]).abs() <= 1e-9 * g.max_param().max(1.0));
            }
        }
    }

    #[test]
    fn social_optimum_is_not_beaten_by_nash(g in arb_game()) {
        let config = SolverConfig::default();
        let nash = solvers::nash_equilibrium(&g, &config).unwrap();
        let opt = solvers::social_optimum(&g, &config).unwrap();
        prop_assert!(game::welfare(&g, &opt).unwrap() >= game::welfare(&g, &nash).unwrap() - 1e-9);
    }

    #[test]
    fn front_points_are_mutually_non_dominated(points in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60)) {
        let pts: Vec<[f64; 2]> = points.iter().map(|&(a, b)| [a, b]).collect();
        let front = pareto::non_dominated(&pts);
        prop_assert!(!front.is_empty());
        for &k in &front {
            prop_assert!(pts.iter().all(|p| !pareto::dominates(*p, pts[k])));
        }
        for (k, p) in pts.iter().enumerate() {
            if !front.contains(&k) {
                prop_assert!(pts.iter().any(|q| pareto::dominates(*q, *p)));
            }
        }
    }
}
