//! The two market games and the generalized social payoff.
//!
//! Both games share the same shape: every agent submits a non-negative action
//! `x_i` and the market aggregates them into `X = Σ x_j`.
//!
//! * **Kelly** proportional allocation: agent `i` receives `d_i = C·x_i/X` of a
//!   divisible resource with capacity `C`, values it linearly at `V_i` per unit
//!   and pays its bid, so `π_i = V_i·C·x_i/X − x_i`.
//! * **Cournot** with linear price `p = X`: `π_i = b_i·x_i − x_i·X`.
//!
//! On top of the material payoff, [`generalized_payoff`] adds a trust-weighted
//! sum of *mirrored* opponent payoffs and a quadratic action-disparity penalty:
//!
//! ```text
//! G_i = π_i + θ_i·Σ_{j≠i} π̂_{i,j} − (γ_i/2)·Σ_{j≠i} (x_i − x_j)²
//! ```
//!
//! where `π̂_{i,j}` is agent `j`'s payoff evaluated with `j`'s private parameter
//! replaced by agent `i`'s own (agents observe actions, never parameters).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by payoff and gradient evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("degenerate Kelly market: total bid is zero (apply the bid floor)")]
    DegenerateMarket,
    #[error("invalid game definition: {0}")]
    InvalidSpec(String),
    #[error("invalid action profile: {0}")]
    InvalidProfile(String),
    #[error("agent index {index} out of range for {n} agents")]
    AgentIndex { index: usize, n: usize },
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Kelly,
    Cournot,
}

/// A fully parameterized game instance.
///
/// Only the fields of the active kind are populated; use [`GameSpec::kelly`]
/// and [`GameSpec::cournot`] to build valid instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameSpec {
    Kelly {
        #[serde(default = "default_capacity")]
        capacity: f64,
        slopes: Vec<f64>,
    },
    Cournot {
        valuations: Vec<f64>,
    },
}

fn default_capacity() -> f64 {
    1.0
}

impl GameSpec {
    pub fn kelly(capacity: f64, slopes: Vec<f64>) -> Result<Self> {
        let spec = GameSpec::Kelly { capacity, slopes };
        spec.validate()?;
        Ok(spec)
    }

    /// Kelly game with unit capacity.
    pub fn kelly_unit(slopes: Vec<f64>) -> Result<Self> {
        Self::kelly(1.0, slopes)
    }

    pub fn cournot(valuations: Vec<f64>) -> Result<Self> {
        let spec = GameSpec::Cournot { valuations };
        spec.validate()?;
        Ok(spec)
    }

    /// Symmetric instance with `n` agents sharing one private parameter.
    pub fn symmetric(kind: GameKind, value: f64, capacity: f64, n: usize) -> Result<Self> {
        match kind {
            GameKind::Kelly => Self::kelly(capacity, vec![value; n]),
            GameKind::Cournot => Self::cournot(vec![value; n]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params();
        if params.is_empty() {
            return Err(GameError::InvalidSpec("at least one agent is required".into()));
        }
        if let GameSpec::Kelly { capacity, .. } = self {
            if !(capacity.is_finite() && *capacity > 0.0) {
                return Err(GameError::InvalidSpec(format!("capacity must be > 0, got {capacity}")));
            }
        }
        if let Some((i, v)) = params.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(GameError::InvalidSpec(format!(
                "private parameter of agent {i} must be finite and > 0, got {v}"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> GameKind {
        match self {
            GameSpec::Kelly { .. } => GameKind::Kelly,
            GameSpec::Cournot { .. } => GameKind::Cournot,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.params().len()
    }

    /// Per-agent private parameters: `V_i` for Kelly, `b_i` for Cournot.
    pub fn params(&self) -> &[f64] {
        match self {
            GameSpec::Kelly { slopes, .. } => slopes,
            GameSpec::Cournot { valuations } => valuations,
        }
    }

    pub fn param(&self, i: usize) -> f64 {
        self.params()[i]
    }

    /// Kelly capacity; `1.0` for Cournot so formulas can be shared.
    pub fn capacity(&self) -> f64 {
        match self {
            GameSpec::Kelly { capacity, .. } => *capacity,
            GameSpec::Cournot { .. } => 1.0,
        }
    }

    pub fn max_param(&self) -> f64 {
        self.params().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy of this game in which every private parameter is `value`.
    pub fn with_uniform_param(&self, value: f64) -> GameSpec {
        let n = self.n_agents();
        match self {
            GameSpec::Kelly { capacity, .. } => GameSpec::Kelly { capacity: *capacity, slopes: vec![value; n] },
            GameSpec::Cournot { .. } => GameSpec::Cournot { valuations: vec![value; n] },
        }
    }

    /// Copy of this game with agent `j`'s private parameter replaced.
    pub fn with_param(&self, j: usize, value: f64) -> GameSpec {
        let mut out = self.clone();
        match &mut out {
            GameSpec::Kelly { slopes, .. } => slopes[j] = value,
            GameSpec::Cournot { valuations } => valuations[j] = value,
        }
        out
    }

    fn check_agent(&self, i: usize) -> Result<()> {
        let n = self.n_agents();
        if i >= n {
            return Err(GameError::AgentIndex { index: i, n });
        }
        Ok(())
    }

    fn check_profile(&self, actions: &[f64]) -> Result<()> {
        if actions.len() != self.n_agents() {
            return Err(GameError::InvalidProfile(format!(
                "expected {} actions, got {}",
                self.n_agents(),
                actions.len()
            )));
        }
        if let Some((i, x)) = actions.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
            return Err(GameError::InvalidProfile(format!("action of agent {i} must be finite and >= 0, got {x}")));
        }
        Ok(())
    }
}

/// Actions of all agents in one simultaneous-move round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionProfile(pub Vec<f64>);

impl ActionProfile {
    pub fn new(actions: Vec<f64>) -> Self {
        ActionProfile(actions)
    }

    pub fn actions(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        total(&self.0)
    }

    /// `X_{−i}`: sum of every action except agent `i`'s.
    pub fn others_total(&self, i: usize) -> f64 {
        others_total(&self.0, i)
    }
}

impl From<Vec<f64>> for ActionProfile {
    fn from(v: Vec<f64>) -> Self {
        ActionProfile(v)
    }
}

/// Sum in index order; every payoff uses this so results are reproducible bit-for-bit.
pub(crate) fn total(actions: &[f64]) -> f64 {
    actions.iter().sum()
}

pub(crate) fn others_total(actions: &[f64], i: usize) -> f64 {
    actions.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).sum()
}

/// Market clearing result for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    #[serde(with = "crate::lossless")]
    pub total: f64,
    #[serde(with = "crate::lossless")]
    pub price: f64,
    /// Kelly resource shares `d_i`; empty for Cournot.
    #[serde(with = "crate::lossless::vec", default, skip_serializing_if = "Vec::is_empty")]
    pub allocations: Vec<f64>,
    #[serde(with = "crate::lossless::vec")]
    pub payoffs: Vec<f64>,
}

impl MarketOutcome {
    /// Social welfare `Σ π_i`.
    pub fn welfare(&self) -> f64 {
        self.payoffs.iter().sum()
    }
}

/// Clears the market for a full action profile.
pub fn market_outcome(spec: &GameSpec, profile: &ActionProfile) -> Result<MarketOutcome> {
    spec.check_profile(profile.actions())?;
    let x = profile.actions();
    let total = total(x);
    let payoffs = (0..x.len()).map(|i| payoff_unchecked(spec, x, i)).collect::<Result<Vec<_>>>()?;
    let (price, allocations) = match spec {
        GameSpec::Kelly { capacity, .. } => (total / capacity, x.iter().map(|xi| xi / total * capacity).collect()),
        GameSpec::Cournot { .. } => (total, Vec::new()),
    };
    Ok(MarketOutcome { total, price, allocations, payoffs })
}

/// Social welfare `Σ_i π_i` of a profile.
pub fn welfare(spec: &GameSpec, profile: &ActionProfile) -> Result<f64> {
    Ok(market_outcome(spec, profile)?.welfare())
}

/// Material payoff `π_i` of agent `i`.
pub fn payoff(spec: &GameSpec, profile: &ActionProfile, i: usize) -> Result<f64> {
    spec.check_agent(i)?;
    spec.check_profile(profile.actions())?;
    payoff_unchecked(spec, profile.actions(), i)
}

fn payoff_unchecked(spec: &GameSpec, x: &[f64], i: usize) -> Result<f64> {
    let total = total(x);
    match spec {
        GameSpec::Kelly { capacity, slopes } => {
            if total <= 0.0 {
                return Err(GameError::DegenerateMarket);
            }
            Ok(slopes[i] * capacity * x[i] / total - x[i])
        }
        GameSpec::Cournot { valuations } => Ok(valuations[i] * x[i] - x[i] * total),
    }
}

/// `∂π_i/∂x_i`.
pub fn own_gradient(spec: &GameSpec, profile: &ActionProfile, i: usize) -> Result<f64> {
    spec.check_agent(i)?;
    spec.check_profile(profile.actions())?;
    let x = profile.actions();
    let others = others_total(x, i);
    match spec {
        GameSpec::Kelly { capacity, slopes } => {
            let total = total(x);
            if total <= 0.0 {
                return Err(GameError::DegenerateMarket);
            }
            Ok(slopes[i] * capacity * others / (total * total) - 1.0)
        }
        GameSpec::Cournot { valuations } => Ok(valuations[i] - 2.0 * x[i] - others),
    }
}

/// `∂π_j/∂x_i` for `j ≠ i`, evaluated with the true parameter of `j`.
pub fn cross_gradient(spec: &GameSpec, profile: &ActionProfile, i: usize, j: usize) -> Result<f64> {
    spec.check_agent(i)?;
    spec.check_agent(j)?;
    if i == j {
        return Err(GameError::InvalidProfile("cross gradient requires j != i".into()));
    }
    spec.check_profile(profile.actions())?;
    cross_gradient_with(spec, profile.actions(), j, spec.param(j))
}

/// `∂π_j/∂x_i` with agent `j`'s private parameter set to `param_j`.
fn cross_gradient_with(spec: &GameSpec, x: &[f64], j: usize, param_j: f64) -> Result<f64> {
    match spec {
        GameSpec::Kelly { capacity, .. } => {
            let total = total(x);
            if total <= 0.0 {
                return Err(GameError::DegenerateMarket);
            }
            Ok(-param_j * capacity * x[j] / (total * total))
        }
        GameSpec::Cournot { .. } => Ok(-x[j]),
    }
}

/// `Σ_{j≠i} ∂π̂_{i,j}/∂x_i`, the mirrored cross-gradient sum agent `i` can compute
/// from observed actions and its own parameter.
pub fn mirrored_cross_gradient_sum(spec: &GameSpec, profile: &ActionProfile, i: usize) -> Result<f64> {
    spec.check_agent(i)?;
    spec.check_profile(profile.actions())?;
    let x = profile.actions();
    let own = spec.param(i);
    (0..x.len()).filter(|&j| j != i).map(|j| cross_gradient_with(spec, x, j, own)).sum()
}

/// Same sum using the opponents' true parameters (diagnostics only).
pub fn true_cross_gradient_sum(spec: &GameSpec, profile: &ActionProfile, i: usize) -> Result<f64> {
    spec.check_agent(i)?;
    spec.check_profile(profile.actions())?;
    let x = profile.actions();
    (0..x.len()).filter(|&j| j != i).map(|j| cross_gradient_with(spec, x, j, spec.param(j))).sum()
}

/// `π̂_{i,j}`: agent `j`'s payoff as estimated by agent `i`, who substitutes its own
/// private parameter for `j`'s.
pub fn mirrored_payoff_estimate(spec: &GameSpec, profile: &ActionProfile, i: usize, j: usize) -> Result<f64> {
    spec.check_agent(i)?;
    spec.check_agent(j)?;
    let mirrored = spec.with_param(j, spec.param(i));
    payoff(&mirrored, profile, j)
}

/// `Σ_{j≠i} (x_i − x_j)`.
pub fn disparity_sum(profile: &ActionProfile, i: usize) -> f64 {
    let x = profile.actions();
    x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, xj)| x[i] - xj).sum()
}

/// Value of the generalized social payoff `G_i`.
pub fn generalized_payoff(spec: &GameSpec, profile: &ActionProfile, i: usize, theta: f64, gamma: f64) -> Result<f64> {
    if !(theta >= 0.0 && gamma >= 0.0) {
        return Err(GameError::InvalidProfile(format!("theta and gamma must be >= 0, got {theta}, {gamma}")));
    }
    let own = payoff(spec, profile, i)?;
    // Exact reduction to the material payoff when both weights vanish.
    if theta == 0.0 && gamma == 0.0 {
        return Ok(own);
    }
    let x = profile.actions();
    let mut social = 0.0;
    let mut disparity = 0.0;
    for j in (0..x.len()).filter(|&j| j != i) {
        social += mirrored_payoff_estimate(spec, profile, i, j)?;
        disparity += (x[i] - x[j]).powi(2);
    }
    Ok(own + theta * social - 0.5 * gamma * disparity)
}

/// Left-hand side of the internal first-order condition
/// `∂π_i/∂x_i + θ·Σ ∂π̂_j/∂x_i − γ·Σ (x_i − x_j)`, using mirrored cross-gradients.
pub fn first_order_residual(spec: &GameSpec, profile: &ActionProfile, i: usize, theta: f64, gamma: f64) -> Result<f64> {
    let g = own_gradient(spec, profile, i)?;
    let c = mirrored_cross_gradient_sum(spec, profile, i)?;
    Ok(g + theta * c - gamma * disparity_sum(profile, i))
}
