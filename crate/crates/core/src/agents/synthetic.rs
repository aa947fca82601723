use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dynamics::{self, DynamicsConstants, SignalPair, SocialState};
use super::observation::{Observation, PrivateGame};
use super::{mirrored_nash_action, modeled_agents, Agent, AgentError, Decision, SocialSnapshot};
use crate::game::GameKind;
use crate::solvers::{self, SolverConfig};

/// Replaces the update law's `(θ, γ)` for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterOverride {
    pub round: usize,
    pub theta: f64,
    pub gamma: f64,
}

impl ParameterOverride {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.round < 2 || !(self.theta >= 0.0 && self.gamma >= 0.0 && self.theta.is_finite() && self.gamma.is_finite()) {
            return Err(AgentError::InvalidConfig(format!(
                "override needs round >= 2 and finite theta, gamma >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Agent maximizing the generalized payoff with `θ` and `γ` driven by the
/// deviation, horizon, observability and parity-cost signals.
///
/// Parameters are updated from round `t − 1` and applied to the round-`t` action.
/// Round 1 plays the mirrored Nash action.
#[derive(Debug, Clone)]
pub struct SyntheticAgent {
    constants: DynamicsConstants,
    coop_action: Option<f64>,
    overrides: BTreeMap<usize, ParameterOverride>,
    solver: SolverConfig,
    state: Option<SocialState>,
    last_signals: Option<SignalPair>,
}

impl SyntheticAgent {
    pub fn new(
        constants: DynamicsConstants,
        coop_action: Option<f64>,
        overrides: Vec<ParameterOverride>,
        solver: SolverConfig,
    ) -> Self {
        SyntheticAgent {
            constants,
            coop_action,
            overrides: overrides.into_iter().map(|o| (o.round, o)).collect(),
            solver,
            state: None,
            last_signals: None,
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(DynamicsConstants::default(), None, Vec::new(), SolverConfig::default())
    }

    pub fn state(&self) -> Option<&SocialState> {
        self.state.as_ref()
    }

    pub fn last_signals(&self) -> Option<SignalPair> {
        self.last_signals
    }

    /// Cooperative action expected from each opponent in an `n`-agent model.
    pub fn coop_action(&self, game: &PrivateGame, n: usize) -> f64 {
        self.coop_action.unwrap_or_else(|| match game.kind {
            GameKind::Cournot => game.own_value / (2.0 * n as f64),
            GameKind::Kelly => game.bid_floor,
        })
    }

    /// Generalized best response against `opponents` in the mirrored game.
    pub fn respond(
        game: &PrivateGame,
        opponents: &[f64],
        theta: f64,
        gamma: f64,
        solver: &SolverConfig,
    ) -> Result<f64, AgentError> {
        let spec = game.mirrored(opponents.len() + 1)?;
        let x = solvers::generalized_best_response(&spec, 0, opponents, theta, gamma, solver)?;
        Ok(match game.kind {
            GameKind::Kelly => x.max(game.bid_floor),
            GameKind::Cournot => x,
        })
    }
}

impl Agent for SyntheticAgent {
    fn act(&mut self, game: &PrivateGame, obs: &Observation) -> Result<Decision, AgentError> {
        let Some(opponents) = obs.last_opponents() else {
            let n = modeled_agents(game);
            self.state = Some(SocialState {
                round: obs.round,
                ..SocialState::new(self.coop_action(game, n), obs.horizon, obs.observability)
            });
            return Ok(Decision {
                action: mirrored_nash_action(game, n),
                social: Some(SocialSnapshot::SELFISH),
                rationale: None,
            });
        };
        let n = opponents.len() + 1;
        let coop = self.coop_action(game, n);
        let mut state = self.state.unwrap_or_else(|| SocialState::new(coop, obs.horizon, obs.observability));
        state.round = obs.round;
        state.horizon = obs.horizon;
        state.coop_reference = coop;

        let signals = dynamics::compute_signals(obs, coop * opponents.len() as f64)?;
        let spec = game.mirrored(n)?;
        let parity_cost = dynamics::cost_of_parity(&spec, 0, &opponents)?;
        let nash_payoff = dynamics::symmetric_nash_payoff(game.kind, game.own_value, game.capacity(), n);
        let omega = self.constants.omega_max.resolve(nash_payoff);

        let (theta, gamma) = match self.overrides.get(&obs.round) {
            Some(o) => (o.theta, o.gamma),
            None => (
                dynamics::update_theta(&state, &signals, &self.constants),
                dynamics::update_gamma(&state, &signals, parity_cost, omega, &self.constants),
            ),
        };
        state.theta = theta;
        state.gamma = gamma;
        self.state = Some(state);
        self.last_signals = Some(signals);

        let action = Self::respond(game, &opponents, theta, gamma, &self.solver)?;
        Ok(Decision { action, social: Some(SocialSnapshot { theta, gamma }), rationale: None })
    }
}
