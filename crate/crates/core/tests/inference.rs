use proptest::prelude::*;

use market_trust::agents::{AgentSpec, DynamicsConstants, Observability, Tolerance};
use market_trust::engine::{run_match, MatchConfig};
use market_trust::game::{GameKind, GameSpec};
use market_trust::inference::{
    extract_trajectory, fit_dynamics, replay_error, Regime, RegimePolicy, SearchMethod, SearchSpace,
};
use market_trust::solvers::SolverConfig;

fn synthetic(constants: DynamicsConstants, coop_action: Option<f64>) -> AgentSpec {
    AgentSpec::Synthetic { constants, coop_action, overrides: Vec::new(), solver: SolverConfig::default() }
}

#[test]
fn myopic_play_extracts_to_zero_weights() {
    for (kind, values) in [(GameKind::Cournot, vec![15.0, 12.0, 9.0]), (GameKind::Kelly, vec![2.0, 1.8, 2.2])] {
        let game = match kind {
            GameKind::Cournot => GameSpec::cournot(values),
            GameKind::Kelly => GameSpec::kelly_unit(values),
        }
        .unwrap();
        let log = run_match(&MatchConfig::new(game, 6, vec![AgentSpec::myopic(); 3])).unwrap();
        let ext = extract_trajectory(&log, &RegimePolicy::Trust).unwrap();
        // Opening moves are mirrored Nash guesses, not answers to observed play.
        for e in ext.estimates.iter().filter(|e| e.round > 1) {
            let theta = e.theta.unwrap();
            assert!(theta.abs() < 1e-9, "{kind:?} round {} agent {}: θ = {theta}", e.round, e.agent);
            assert_eq!(e.regime, Regime::Trust);
        }
    }
}

#[test]
fn aggregate_only_logs_cannot_be_extracted() {
    let mut config =
        MatchConfig::new(GameSpec::cournot(vec![15.0, 15.0]).unwrap(), 3, vec![AgentSpec::synthetic(); 2]);
    config.observability = Observability::AggregateOnly;
    assert!(extract_trajectory(&run_match(&config).unwrap(), &RegimePolicy::default()).is_err());
}

#[test]
fn joint_window_recovers_constant_weights() {
    let agent = AgentSpec::Synthetic {
        constants: DynamicsConstants::default(),
        coop_action: None,
        overrides: (2..=8).map(|round| market_trust::agents::ParameterOverride { round, theta: 0.3, gamma: 0.8 }).collect(),
        solver: SolverConfig::default(),
    };
    let config = MatchConfig::new(GameSpec::cournot(vec![15.0, 11.0]).unwrap(), 8, vec![agent, AgentSpec::myopic()]);
    let log = run_match(&config).unwrap();
    let ext = extract_trajectory(&log, &RegimePolicy::JointWindow { window: 3 }).unwrap();
    // Rows from rounds 2.. only; round-1 play is Nash.
    let e = ext.get(6, 0).unwrap();
    assert!((e.theta.unwrap() - 0.3).abs() < 1e-9 && (e.gamma.unwrap() - 0.8).abs() < 1e-9, "{e:?}");
}

fn generating_constants() -> DynamicsConstants {
    DynamicsConstants {
        lambda: 1.0,
        rho: 0.7,
        alpha: 0.5,
        epsilon: 0.05,
        omega_max: Tolerance::NashFraction(0.5),
        ..DynamicsConstants::default()
    }
}

#[test]
fn fit_recovers_a_zero_error_fit_and_flags_epsilon() {
    let truth = generating_constants();
    let logs: Vec<_> = [(15.0, 15.0), (14.0, 12.0), (16.0, 15.0)]
        .iter()
        .map(|&(b1, b2)| {
            run_match(&MatchConfig::new(GameSpec::cournot(vec![b1, b2]).unwrap(), 8, vec![synthetic(truth, None); 2]))
                .unwrap()
        })
        .collect();
    assert_eq!(replay_error(&logs, None, &truth).unwrap(), 0.0);
    let fit = fit_dynamics(&logs, &SearchSpace::default()).unwrap();
    assert_eq!(fit.replay_error, 0.0);
    assert_eq!(fit.evaluations, 4 * 3 * 3 * 3 * 4);
    // With open information the floor ε never binds.
    assert!(fit.flat_dimensions().contains(&"epsilon"), "{:?}", fit.flat_dimensions());
    assert!(!fit.flat_dimensions().contains(&"lambda"));

    let coordinate = SearchSpace { method: SearchMethod::Coordinate { max_sweeps: 10 }, ..SearchSpace::default() };
    let fit2 = fit_dynamics(&logs, &coordinate).unwrap();
    assert!(fit2.evaluations < fit.evaluations);
    assert!(fit2.replay_error >= fit.replay_error);
}

#[test]
fn lambda_is_flat_without_deviation_signal() {
    let logs = vec![run_match(&MatchConfig::new(
        GameSpec::cournot(vec![15.0, 15.0]).unwrap(),
        6,
        vec![synthetic(generating_constants(), Some(7.5)); 2],
    ))
    .unwrap()];
    let fit = fit_dynamics(&logs, &SearchSpace::default()).unwrap();
    assert_eq!(fit.replay_error, 0.0);
    let flat = fit.flat_dimensions();
    assert!(flat.contains(&"lambda") && flat.contains(&"epsilon"), "{flat:?}");
}

#[test]
fn fit_on_aggregate_only_logs_sees_epsilon() {
    let truth = DynamicsConstants { epsilon: 0.2, ..generating_constants() };
    let mut config =
        MatchConfig::new(GameSpec::cournot(vec![15.0, 15.0]).unwrap(), 8, vec![synthetic(truth, None); 2]);
    config.observability = Observability::AggregateOnly;
    let log = run_match(&config).unwrap();
    let space = SearchSpace { lambda: vec![1.0], rho: vec![0.7], alpha: vec![0.5], ..SearchSpace::default() };
    let fit = fit_dynamics(&[log], &space).unwrap();
    assert_eq!(fit.constants.epsilon, 0.2);
    assert!(!fit.flat_dimensions().contains(&"epsilon"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Single-regime schedules round-trip through extraction with recorded regimes.
    #[test]
    fn recorded_regimes_round_trip(
        b in 8.0f64..20.0,
        schedule in proptest::collection::vec((any::<bool>(), 0.0f64..1.0, 0.0f64..2.0), 2..9),
    ) {
        let horizon = schedule.len() + 1;
        let overrides: Vec<_> = schedule
            .iter()
            .enumerate()
            .map(|(k, &(trust, theta, gamma))| market_trust::agents::ParameterOverride {
                round: k + 2,
                theta: if trust { theta } else { 0.0 },
                gamma: if trust { 0.0 } else { gamma },
            })
            .collect();
        let agent = AgentSpec::Synthetic {
            constants: DynamicsConstants::default(),
            coop_action: None,
            overrides,
            solver: SolverConfig::default(),
        };
        let log = run_match(&MatchConfig::new(GameSpec::cournot(vec![b, b]).unwrap(), horizon, vec![agent, AgentSpec::myopic()])).unwrap();
        let ext = extract_trajectory(&log, &RegimePolicy::Recorded).unwrap();
        for r in &log.rounds {
            let rec = r.social[0].unwrap();
            let e = ext.get(r.round, 0).unwrap();
            if let (Some(theta), Some(gamma)) = (e.theta, e.gamma) {
                prop_assert!((theta - rec.theta).abs() < 1e-6 && (gamma - rec.gamma).abs() < 1e-6,
                    "round {}: extracted ({theta}, {gamma}) recorded ({}, {})", r.round, rec.theta, rec.gamma);
            } else {
                prop_assert_eq!(e.regime, Regime::Punishment);
            }
        }
    }
}
