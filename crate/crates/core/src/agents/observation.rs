use serde::{Deserialize, Serialize};

use crate::game::{GameError, GameKind, GameSpec};

/// What agents are told about their opponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Observability {
    /// Opponent count and individual actions are visible.
    #[default]
    OpenInfo,
    /// Only the opponents' aggregate action and the market price are visible.
    AggregateOnly,
}

impl Observability {
    /// The observability indicator `I`.
    pub fn indicator(self) -> f64 {
        match self {
            Observability::OpenInfo => 1.0,
            Observability::AggregateOnly => 0.0,
        }
    }
}

/// The part of the game an agent is allowed to know: its own private parameter,
/// the mechanism, and (under open information) the number of agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateGame {
    pub kind: GameKind,
    /// `b_i` (Cournot) or `V_i` (Kelly).
    pub own_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    pub bid_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_agents: Option<usize>,
}

impl PrivateGame {
    pub fn for_agent(spec: &GameSpec, i: usize, bid_floor: f64, mode: Observability) -> Self {
        PrivateGame {
            kind: spec.kind(),
            own_value: spec.param(i),
            capacity: (spec.kind() == GameKind::Kelly).then(|| spec.capacity()),
            bid_floor,
            n_agents: (mode == Observability::OpenInfo).then(|| spec.n_agents()),
        }
    }

    pub fn capacity(&self) -> f64 {
        self.capacity.unwrap_or(1.0)
    }

    /// The game as the agent models it: `n` agents that all share its parameter.
    pub fn mirrored(&self, n: usize) -> Result<GameSpec, GameError> {
        GameSpec::symmetric(self.kind, self.own_value, self.capacity(), n)
    }
}

/// Opponent information from one past round, filtered by observability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MarketView {
    /// Every agent's action, including the observer's own, in index order.
    OpenInfo { actions: Vec<f64> },
    /// Only `X_{−i}`.
    AggregateOnly { others_total: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedRound {
    pub round: usize,
    pub own_action: f64,
    pub own_payoff: f64,
    pub price: f64,
    pub market: MarketView,
}

impl ObservedRound {
    /// Opponent actions as the agent sees them; a single pseudo-opponent holding
    /// the aggregate under aggregate-only information.
    pub fn opponents(&self, own_index: usize) -> Vec<f64> {
        match &self.market {
            MarketView::OpenInfo { actions } => {
                actions.iter().enumerate().filter(|(j, _)| *j != own_index).map(|(_, x)| *x).collect()
            }
            MarketView::AggregateOnly { others_total } => vec![*others_total],
        }
    }

    pub fn others_total(&self, own_index: usize) -> f64 {
        match &self.market {
            MarketView::OpenInfo { .. } => self.opponents(own_index).iter().sum(),
            MarketView::AggregateOnly { others_total } => *others_total,
        }
    }
}

/// Everything an agent sees before choosing its action for `round`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub round: usize,
    pub horizon: usize,
    pub agent_index: usize,
    pub observability: Observability,
    /// Completed rounds `1..round`, oldest first.
    pub history: Vec<ObservedRound>,
}

impl Observation {
    pub fn last(&self) -> Option<&ObservedRound> {
        self.history.last()
    }

    /// Opponent actions from the latest completed round.
    pub fn last_opponents(&self) -> Option<Vec<f64>> {
        self.last().map(|r| r.opponents(self.agent_index))
    }

    /// Remaining horizon `τ = T − t` for the round about to be played.
    pub fn remaining(&self) -> usize {
        self.horizon.saturating_sub(self.round)
    }
}
