//! Round coordinator for simultaneous-move repeated play.
//!
//! Each round every agent sees only completed rounds, filtered by the
//! observability mode. Forced actions replace the agents' choices after they
//! are queried, so each agent's own state evolves as if it had acted; the forced
//! value is what the market and every later observation report.

use std::path::Path;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    Agent, AgentError, AgentSpec, BuildContext, Decision, MarketView, Observability, Observation, ObservedRound,
    PrivateGame,
};
use crate::game::{self, ActionProfile, GameError, GameKind, GameSpec};

mod log;

pub use log::{export_csv, load, load_str, persist, persist_string, MatchStatus, RoundRecord, TrajectoryLog};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid match configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("agent {index}: {source}")]
    Agent {
        index: usize,
        #[source]
        source: AgentError,
    },
    #[error("round {round} is outside the observable range 1..={limit}")]
    Range { round: usize, limit: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("line {line}: {message} (at `{path}`)")]
    Parse { line: usize, path: String, message: String },
    #[error("trajectory file is truncated: {0}")]
    Truncated(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

/// Action forced on one agent in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub round: usize,
    pub agent: usize,
    pub action: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfig {
    pub game: GameSpec,
    pub horizon: usize,
    #[serde(default)]
    pub observability: Observability,
    #[serde(default = "default_bid_floor")]
    pub bid_floor: f64,
    pub agents: Vec<AgentSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<Perturbation>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_id: Option<String>,
    /// Per-query deadline for external agents.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Query the agents of a round on separate threads.
    #[serde(default)]
    pub concurrent: bool,
}

fn default_bid_floor() -> f64 {
    1e-3
}

fn default_timeout() -> f64 {
    30.0
}

impl MatchConfig {
    pub fn new(game: GameSpec, horizon: usize, agents: Vec<AgentSpec>) -> Self {
        MatchConfig {
            game,
            horizon,
            observability: Observability::OpenInfo,
            bid_floor: default_bid_floor(),
            agents,
            perturbations: Vec::new(),
            seed: 0,
            match_id: None,
            timeout_secs: default_timeout(),
            concurrent: false,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: MatchConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn match_id(&self) -> String {
        self.match_id.clone().unwrap_or_else(|| format!("match-{}", self.seed))
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    /// Checks everything except the roster bindings themselves.
    fn validate_frame(&self, roster: usize) -> Result<()> {
        self.game.validate()?;
        let n = self.game.n_agents();
        let bad = |m: String| Err(EngineError::InvalidConfig(m));
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if roster != n {
            return bad(format!("roster has {roster} agents but the game has {n}"));
        }
        if !(self.bid_floor > 0.0 && self.bid_floor.is_finite()) {
            return bad(format!("bid_floor must be > 0, got {}", self.bid_floor));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad(format!("timeout_secs must be > 0, got {}", self.timeout_secs));
        }
        for p in &self.perturbations {
            if p.round == 0 || p.round > self.horizon || p.agent >= n || !(p.action >= 0.0 && p.action.is_finite()) {
                return bad(format!("perturbation out of range: {p:?}"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_frame(self.agents.len())?;
        for (index, a) in self.agents.iter().enumerate() {
            a.validate().map_err(|source| EngineError::Agent { index, source })?;
        }
        Ok(())
    }

    pub fn private_game(&self, i: usize) -> PrivateGame {
        PrivateGame::for_agent(&self.game, i, self.bid_floor, self.observability)
    }

    fn forced(&self, round: usize, agent: usize) -> Option<f64> {
        self.perturbations.iter().rev().find(|p| p.round == round && p.agent == agent).map(|p| p.action)
    }
}

/// Builds the roster from its bindings and plays the match.
pub fn run_match(config: &MatchConfig) -> Result<TrajectoryLog> {
    config.validate()?;
    let agents = config
        .agents
        .iter()
        .enumerate()
        .map(|(index, spec)| {
            let ctx = BuildContext { index, seed: config.seed, match_id: config.match_id(), timeout: config.timeout() };
            spec.build(&ctx).map_err(|source| EngineError::Agent { index, source })
        })
        .collect::<Result<Vec<_>>>()?;
    run_match_with(config, agents)
}

/// Plays the match with caller-supplied agents in place of the configured roster.
///
/// An agent error or invalid action stops the match; the returned log then holds
/// the completed rounds and a failure status.
pub fn run_match_with(config: &MatchConfig, mut agents: Vec<Box<dyn Agent>>) -> Result<TrajectoryLog> {
    config.validate_frame(agents.len())?;
    let n = agents.len();
    let games: Vec<PrivateGame> = (0..n).map(|i| config.private_game(i)).collect();
    let mut log = TrajectoryLog::new(config.clone());

    for round in 1..=config.horizon {
        let observations = (0..n).map(|i| build_observation(&log, i, round)).collect::<Result<Vec<_>>>()?;
        let decisions = query(&mut agents, &games, &observations, config.concurrent);

        let mut intended = Vec::with_capacity(n);
        for (index, d) in decisions.into_iter().enumerate() {
            match d.and_then(|d| check_action(d, index)) {
                Ok(d) => intended.push(d),
                Err(e) => {
                    log.status = MatchStatus::Failed { round, agent: Some(index), reason: e.to_string() };
                    return Ok(log);
                }
            }
        }

        let mut actions = Vec::with_capacity(n);
        let mut perturbed = Vec::with_capacity(n);
        for (i, d) in intended.iter().enumerate() {
            let forced = config.forced(round, i);
            perturbed.push(forced.is_some());
            let x = forced.unwrap_or(d.action);
            actions.push(match config.game.kind() {
                GameKind::Kelly => x.max(config.bid_floor),
                GameKind::Cournot => x,
            });
        }
        let outcome = game::market_outcome(&config.game, &ActionProfile::new(actions.clone()))?;
        let rationales = if intended.iter().any(|d| d.rationale.is_some()) {
            intended.iter().map(|d| d.rationale.clone()).collect()
        } else {
            Vec::new()
        };
        log.rounds.push(RoundRecord {
            round,
            actions,
            perturbed,
            outcome,
            social: intended.iter().map(|d| d.social).collect(),
            rationales,
        });
    }
    log.status = MatchStatus::Completed;
    Ok(log)
}

fn check_action(d: Decision, index: usize) -> std::result::Result<Decision, AgentError> {
    if d.action.is_finite() && d.action >= 0.0 {
        Ok(d)
    } else {
        Err(AgentError::InvalidConfig(format!("agent {index} returned invalid action {}", d.action)))
    }
}

fn query(
    agents: &mut [Box<dyn Agent>],
    games: &[PrivateGame],
    observations: &[Observation],
    concurrent: bool,
) -> Vec<std::result::Result<Decision, AgentError>> {
    if !concurrent {
        return agents.iter_mut().enumerate().map(|(i, a)| a.act(&games[i], &observations[i])).collect();
    }
    thread::scope(|s| {
        let handles: Vec<_> = agents
            .iter_mut()
            .enumerate()
            .map(|(i, a)| s.spawn(move || a.act(&games[i], &observations[i])))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(AgentError::InvalidConfig("agent thread panicked".into()))))
            .collect()
    })
}

/// What agent `i` sees before choosing its round-`round` action: rounds
/// `1..round` of `log`, filtered by the match's observability mode.
pub fn build_observation(log: &TrajectoryLog, i: usize, round: usize) -> Result<Observation> {
    let limit = log.rounds.len() + 1;
    if round == 0 || round > limit {
        return Err(EngineError::Range { round, limit });
    }
    let n = log.config.game.n_agents();
    if i >= n {
        return Err(GameError::AgentIndex { index: i, n }.into());
    }
    let mode = log.config.observability;
    let history = log.rounds[..round - 1]
        .iter()
        .map(|r| ObservedRound {
            round: r.round,
            own_action: r.actions[i],
            own_payoff: r.outcome.payoffs[i],
            price: r.outcome.price,
            market: match mode {
                Observability::OpenInfo => MarketView::OpenInfo { actions: r.actions.clone() },
                Observability::AggregateOnly => {
                    MarketView::AggregateOnly { others_total: game::others_total(&r.actions, i) }
                }
            },
        })
        .collect();
    Ok(Observation { round, horizon: log.config.horizon, agent_index: i, observability: mode, history })
}
