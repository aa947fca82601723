//! Trust and stability update laws.

use serde::{Deserialize, Serialize};

use super::observation::{Observability, Observation};
use super::AgentError;
use crate::game::{self, GameKind, GameSpec};
use crate::solvers::{self, with_action};

/// Parity-cost tolerance `Ω_max`, either absolute or as a fraction of the
/// agent's mirrored symmetric Nash payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    NashFraction(f64),
    Absolute(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::NashFraction(0.25)
    }
}

impl Tolerance {
    pub fn value(self) -> f64 {
        match self {
            Tolerance::NashFraction(v) | Tolerance::Absolute(v) => v,
        }
    }

    /// Absolute threshold given the reference Nash payoff.
    pub fn resolve(self, nash_payoff: f64) -> f64 {
        match self {
            Tolerance::NashFraction(f) => f * nash_payoff.abs(),
            Tolerance::Absolute(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConstants {
    /// θ floor under aggregate-only information.
    pub epsilon: f64,
    /// Deviation penalty rate in the θ law.
    pub lambda: f64,
    /// γ memory decay.
    pub rho: f64,
    /// Discount on corrective adjustments in the γ law.
    pub alpha: f64,
    pub omega_max: Tolerance,
    /// Coefficient on `E` in the γ law.
    pub deviation_gain: f64,
}

impl Default for DynamicsConstants {
    fn default() -> Self {
        DynamicsConstants {
            epsilon: 0.05,
            lambda: 2.0,
            rho: 0.9,
            alpha: 0.5,
            omega_max: Tolerance::default(),
            deviation_gain: 1.0,
        }
    }
}

impl DynamicsConstants {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |what: &str, v: f64| Err(AgentError::InvalidConfig(format!("{what} out of range: {v}")));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", self.epsilon);
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", self.lambda);
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho", self.rho);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        let omega = self.omega_max.value();
        if !(omega > 0.0 && omega.is_finite()) {
            return bad("omega_max", omega);
        }
        if !(self.deviation_gain > 0.0 && self.deviation_gain.is_finite()) {
            return bad("deviation_gain", self.deviation_gain);
        }
        Ok(())
    }
}

/// An agent's social parameters and the clock they are evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocialState {
    pub theta: f64,
    pub gamma: f64,
    /// Cooperative action expected from each opponent.
    pub coop_reference: f64,
    /// Round whose action is being chosen.
    pub round: usize,
    pub horizon: usize,
    pub observability: Observability,
}

impl SocialState {
    pub fn new(coop_reference: f64, horizon: usize, observability: Observability) -> Self {
        SocialState { theta: 0.0, gamma: 0.0, coop_reference, round: 1, horizon, observability }
    }

    /// Remaining horizon `τ = T − t`.
    pub fn remaining(&self) -> usize {
        self.horizon.saturating_sub(self.round)
    }
}

/// Positive deviation `E` and corrective adjustment `A`, in action units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalPair {
    pub deviation: f64,
    pub correction: f64,
}

impl SignalPair {
    pub fn from_difference(observed: f64, reference: f64) -> Self {
        SignalPair { deviation: (observed - reference).max(0.0), correction: (reference - observed).max(0.0) }
    }
}

/// Signals from the latest completed round against the opponents' cooperative
/// aggregate `x^coop_{−i}`.
pub fn compute_signals(observation: &Observation, coop_others: f64) -> Result<SignalPair, AgentError> {
    let last = observation.last().ok_or(AgentError::EmptyHistory)?;
    Ok(SignalPair::from_difference(last.others_total(observation.agent_index), coop_others))
}

/// `θ' = max(ε, I) · (τ/T) · exp(−λE)`.
pub fn update_theta(state: &SocialState, signals: &SignalPair, constants: &DynamicsConstants) -> f64 {
    if state.horizon == 0 {
        return 0.0;
    }
    let visibility = constants.epsilon.max(state.observability.indicator());
    let horizon = state.remaining() as f64 / state.horizon as f64;
    visibility * horizon * (-constants.lambda * signals.deviation).exp()
}

/// `γ' = 𝕀(Δπ ≤ Ω_max) · 𝕀(τ > 0) · max(0, ργ + gain·E − αA)`, with `Ω_max`
/// already resolved to an absolute threshold.
pub fn update_gamma(
    state: &SocialState,
    signals: &SignalPair,
    cost_of_parity: f64,
    omega_max: f64,
    constants: &DynamicsConstants,
) -> f64 {
    if cost_of_parity > omega_max || state.remaining() == 0 {
        return 0.0;
    }
    (constants.rho * state.gamma + constants.deviation_gain * signals.deviation - constants.alpha * signals.correction)
        .max(0.0)
}

/// Profit agent `i` gives up by matching the mean opponent action instead of
/// best-responding.
pub fn cost_of_parity(spec: &GameSpec, i: usize, opponents: &[f64]) -> Result<f64, AgentError> {
    if opponents.is_empty() {
        return Err(AgentError::InvalidConfig("cost of parity needs at least one opponent".into()));
    }
    let others: f64 = opponents.iter().sum();
    let parity = others / opponents.len() as f64;
    let best = solvers::best_response(spec, i, others)?;
    let at_best = game::payoff(spec, &with_action(opponents, i, best), i)?;
    let at_parity = game::payoff(spec, &with_action(opponents, i, parity), i)?;
    Ok((at_best - at_parity).max(0.0))
}

/// Payoff of each agent at the symmetric Nash point of an `n`-agent game in
/// which everyone shares `value`.
pub fn symmetric_nash_payoff(kind: GameKind, value: f64, capacity: f64, n: usize) -> f64 {
    let nf = n as f64;
    match kind {
        GameKind::Cournot => value * value / ((nf + 1.0) * (nf + 1.0)),
        GameKind::Kelly => value * capacity / (nf * nf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::observation::{MarketView, ObservedRound};

    fn state(round: usize, horizon: usize, gamma: f64) -> SocialState {
        SocialState { gamma, round, ..SocialState::new(3.75, horizon, Observability::OpenInfo) }
    }

    fn observed(actions: Vec<f64>) -> Observation {
        Observation {
            round: 2,
            horizon: 10,
            agent_index: 0,
            observability: Observability::OpenInfo,
            history: vec![ObservedRound {
                round: 1,
                own_action: actions[0],
                own_payoff: 0.0,
                price: actions.iter().sum(),
                market: MarketView::OpenInfo { actions },
            }],
        }
    }

    #[test]
    fn signals_from_history() {
        let s = compute_signals(&observed(vec![5.0, 5.625]), 3.75).unwrap();
        assert_eq!((s.deviation, s.correction), (1.875, 0.0));
        let s = compute_signals(&observed(vec![5.0, 3.75]), 3.75).unwrap();
        assert_eq!((s.deviation, s.correction), (0.0, 0.0));
        let s = compute_signals(&observed(vec![5.0, 2.5]), 3.75).unwrap();
        assert_eq!((s.deviation, s.correction), (0.0, 1.25));
        let empty = Observation { history: vec![], ..observed(vec![1.0, 1.0]) };
        assert!(matches!(compute_signals(&empty, 3.75), Err(AgentError::EmptyHistory)));
    }

    #[test]
    fn theta_law() {
        let c = DynamicsConstants::default();
        let none = SignalPair::default();
        // τ = T only when choosing round 0; start the clock there to isolate the factor.
        assert_eq!(update_theta(&state(0, 10, 0.0), &none, &c), 1.0);
        assert_eq!(update_theta(&state(10, 10, 0.0), &none, &c), 0.0);
        let blind = SocialState { observability: Observability::AggregateOnly, ..state(0, 10, 0.0) };
        assert_eq!(update_theta(&blind, &none, &c), 0.05);
        let hit = SignalPair { deviation: 1.0, correction: 0.0 };
        assert!((update_theta(&state(0, 10, 0.0), &hit, &c) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gamma_law() {
        let c = DynamicsConstants::default();
        let betrayal = SignalPair { deviation: 1.875, correction: 0.0 };
        assert_eq!(update_gamma(&state(7, 10, 0.0), &betrayal, 0.0, 1.0, &c), 1.875);
        assert_eq!(update_gamma(&state(7, 10, 0.0), &betrayal, 2.0, 1.0, &c), 0.0);
        assert_eq!(update_gamma(&state(10, 10, 0.0), &betrayal, 0.0, 1.0, &c), 0.0);
        let correction = SignalPair { deviation: 0.0, correction: 1.25 };
        assert!((update_gamma(&state(8, 10, 1.0), &correction, 0.0, 1.0, &c) - 0.275).abs() < 1e-15);
        let big = SignalPair { deviation: 0.0, correction: 10.0 };
        assert_eq!(update_gamma(&state(8, 10, 1.0), &big, 0.0, 1.0, &c), 0.0);
    }

    #[test]
    fn parity_cost() {
        let sym = GameSpec::cournot(vec![15.0, 15.0]).unwrap();
        assert_eq!(cost_of_parity(&sym, 0, &[5.0]).unwrap(), 0.0);
        let asym = GameSpec::cournot(vec![15.0, 10.0]).unwrap();
        assert!((cost_of_parity(&asym, 0, &[2.5]).unwrap() - 14.0625).abs() < 1e-12);
        let kelly = GameSpec::kelly_unit(vec![2.0, 2.0]).unwrap();
        assert!(cost_of_parity(&kelly, 0, &[0.0]).is_err());
        assert!(cost_of_parity(&kelly, 0, &[0.1]).unwrap() > 0.0);
    }

    #[test]
    fn nash_payoffs() {
        assert_eq!(symmetric_nash_payoff(GameKind::Cournot, 15.0, 1.0, 2), 25.0);
        assert_eq!(symmetric_nash_payoff(GameKind::Kelly, 2.0, 1.0, 2), 0.5);
    }

    #[test]
    fn constants_validation() {
        assert!(DynamicsConstants::default().validate().is_ok());
        assert!(DynamicsConstants { rho: 1.0, ..Default::default() }.validate().is_err());
        assert!(DynamicsConstants { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(DynamicsConstants { omega_max: Tolerance::Absolute(-1.0), ..Default::default() }.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn theta_stays_in_unit_interval(
            e in 0.0f64..100.0, round in 0usize..30, horizon in 1usize..30,
            eps in 0.001f64..0.999, lambda in 0.001f64..50.0, blind in proptest::bool::ANY,
        ) {
            let c = DynamicsConstants { epsilon: eps, lambda, ..Default::default() };
            let mode = if blind { Observability::AggregateOnly } else { Observability::OpenInfo };
            let s = SocialState { round: round.min(horizon), ..SocialState::new(0.0, horizon, mode) };
            let t = update_theta(&s, &SignalPair { deviation: e, correction: 0.0 }, &c);
            proptest::prop_assert!((0.0..=1.0).contains(&t));
            if blind { proptest::prop_assert!(t <= eps); }
        }

        #[test]
        fn signals_are_exclusive(obs in 0.0f64..100.0, reference in 0.0f64..100.0) {
            let s = SignalPair::from_difference(obs, reference);
            proptest::prop_assert_eq!(s.deviation * s.correction, 0.0);
        }
    }
}
