//! Agent behaviors: myopic best response, the synthetic social agent, scripted
//! play and external agents reached over the wire protocol.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::GameError;
use crate::protocol::{Endpoint, ExternalAgent, ProtocolError};
use crate::solvers::{SolverConfig, SolverError};

pub mod dynamics;
mod myopic;
pub mod observation;
mod scripted;
mod synthetic;

pub use dynamics::{DynamicsConstants, SignalPair, SocialState, Tolerance};
pub use myopic::MyopicAgent;
pub use observation::{MarketView, Observability, Observation, ObservedRound, PrivateGame};
pub use scripted::{ScriptStep, ScriptedAgent};
pub use synthetic::{ParameterOverride, SyntheticAgent};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("no completed round to observe")]
    EmptyHistory,
    #[error("no scripted action for round {round} and no fallback behavior")]
    Unscripted { round: usize },
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

/// `θ` and `γ` in force for an action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocialSnapshot {
    #[serde(with = "crate::lossless")]
    pub theta: f64,
    #[serde(with = "crate::lossless")]
    pub gamma: f64,
}

impl SocialSnapshot {
    pub const SELFISH: SocialSnapshot = SocialSnapshot { theta: 0.0, gamma: 0.0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: f64,
    pub social: Option<SocialSnapshot>,
    pub rationale: Option<String>,
}

impl Decision {
    pub fn plain(action: f64) -> Self {
        Decision { action, social: None, rationale: None }
    }
}

/// One participant in a repeated game. Each agent is driven serially by the
/// engine; distinct agents may be queried from different threads.
pub trait Agent: Send {
    fn act(&mut self, game: &PrivateGame, observation: &Observation) -> Result<Decision, AgentError>;
}

/// Serializable binding from a roster slot to a behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    Myopic {
        /// Standard deviation of Gaussian noise added to each best response.
        #[serde(default)]
        noise: f64,
    },
    Synthetic {
        #[serde(default)]
        constants: DynamicsConstants,
        /// Cooperative action expected from each opponent; defaults to the
        /// mirrored social optimum.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coop_action: Option<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overrides: Vec<ParameterOverride>,
        #[serde(default)]
        solver: SolverConfig,
    },
    Scripted {
        steps: Vec<ScriptStep>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fallback: Option<Box<AgentSpec>>,
    },
    External {
        endpoint: Endpoint,
    },
}

impl AgentSpec {
    pub fn synthetic() -> Self {
        AgentSpec::Synthetic {
            constants: DynamicsConstants::default(),
            coop_action: None,
            overrides: Vec::new(),
            solver: SolverConfig::default(),
        }
    }

    pub fn myopic() -> Self {
        AgentSpec::Myopic { noise: 0.0 }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        match self {
            AgentSpec::Myopic { noise } if !(*noise >= 0.0 && noise.is_finite()) => {
                Err(AgentError::InvalidConfig(format!("noise must be finite and >= 0, got {noise}")))
            }
            AgentSpec::Myopic { .. } => Ok(()),
            AgentSpec::Synthetic { constants, coop_action, overrides, solver } => {
                constants.validate()?;
                solver.validate()?;
                if let Some(c) = coop_action.filter(|c| !(*c >= 0.0 && c.is_finite())) {
                    return Err(AgentError::InvalidConfig(format!("coop_action must be finite and >= 0, got {c}")));
                }
                overrides.iter().try_for_each(ParameterOverride::validate)
            }
            AgentSpec::Scripted { steps, fallback } => {
                if let Some(s) = steps.iter().find(|s| !(s.action >= 0.0 && s.action.is_finite()) || s.round == 0) {
                    return Err(AgentError::InvalidConfig(format!("invalid script step {s:?}")));
                }
                fallback.as_deref().map_or(Ok(()), AgentSpec::validate)
            }
            AgentSpec::External { .. } => Ok(()),
        }
    }

    /// Instantiates the behavior for roster slot `index`.
    pub fn build(&self, ctx: &BuildContext) -> Result<Box<dyn Agent>, AgentError> {
        self.validate()?;
        Ok(match self {
            AgentSpec::Myopic { noise } => Box::new(MyopicAgent::new(*noise, ctx.seed ^ ctx.index as u64)),
            AgentSpec::Synthetic { constants, coop_action, overrides, solver } => {
                Box::new(SyntheticAgent::new(*constants, *coop_action, overrides.clone(), solver.clone()))
            }
            AgentSpec::Scripted { steps, fallback } => {
                let fallback = fallback.as_deref().map(|f| f.build(ctx)).transpose()?;
                Box::new(ScriptedAgent::new(steps, fallback))
            }
            AgentSpec::External { endpoint } => {
                Box::new(ExternalAgent::connect(endpoint, ctx.match_id.clone(), ctx.timeout)?)
            }
        })
    }
}

/// Match-level facts an agent needs at construction.
#[derive(Debug, Clone)]
pub struct BuildContext {
    pub index: usize,
    pub seed: u64,
    pub match_id: String,
    pub timeout: Duration,
}

/// Action the agent would play at symmetric Nash against `n − 1` copies of itself.
pub(crate) fn mirrored_nash_action(game: &PrivateGame, n: usize) -> f64 {
    let x = crate::solvers::symmetric_nash_action(game.kind, game.own_value, game.capacity(), n);
    match game.kind {
        crate::game::GameKind::Kelly => x.max(game.bid_floor),
        crate::game::GameKind::Cournot => x,
    }
}

/// Number of agents the observer models: disclosed under open information,
/// assumed to be two (self plus one pseudo-opponent) otherwise.
pub(crate) fn modeled_agents(game: &PrivateGame) -> usize {
    game.n_agents.unwrap_or(2)
}
