//! Best responses, equilibria and the generalized best response.
//!
//! Cournot quantities have closed forms throughout. Kelly Nash equilibria are
//! found by damped best-response iteration and the Kelly generalized best
//! response by bisection on the first-order condition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{self, ActionProfile, GameError, GameKind, GameSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, last: Vec<f64> },
    #[error("first-order condition has no sign change on [{lower}, {upper}]: f(lower) = {f_lower:e}, f(upper) = {f_upper:e}")]
    NoSignChange { lower: f64, upper: f64, f_lower: f64, f_upper: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step factor for best-response iteration, in `(0, 1]`.
    pub damping: f64,
    /// Upper end of the root bracket; `None` selects `b_max` (Cournot) or `V_max·C` (Kelly).
    pub bracket_upper: Option<f64>,
    /// Smallest admissible Kelly bid, used by the social optimum.
    pub bid_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: 10_000, damping: 0.5, bracket_upper: None, bid_floor: 1e-3 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::InvalidConfig(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tolerance > 0.0) {
            return Err(SolverError::InvalidConfig(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.bid_floor > 0.0) {
            return Err(SolverError::InvalidConfig(format!("bid_floor must be > 0, got {}", self.bid_floor)));
        }
        Ok(())
    }

    pub fn bracket_upper_for(&self, spec: &GameSpec) -> f64 {
        self.bracket_upper.unwrap_or_else(|| spec.max_param() * spec.capacity())
    }
}

/// Payoff-maximizing action of agent `i` against an opponent total `X_{−i}`.
pub fn best_response(spec: &GameSpec, i: usize, others_total: f64) -> Result<f64> {
    if i >= spec.n_agents() {
        return Err(GameError::AgentIndex { index: i, n: spec.n_agents() }.into());
    }
    if !(others_total.is_finite() && others_total >= 0.0) {
        return Err(SolverError::InvalidArgument(format!("opponent total must be finite and >= 0, got {others_total}")));
    }
    let v = spec.param(i);
    match spec.kind() {
        GameKind::Cournot => Ok(((v - others_total) / 2.0).max(0.0)),
        GameKind::Kelly => {
            // The supremum at X_{-i} = 0 is approached as x -> 0+ and never attained.
            if others_total == 0.0 {
                return Err(GameError::DegenerateMarket.into());
            }
            Ok(((v * spec.capacity() * others_total).sqrt() - others_total).max(0.0))
        }
    }
}

/// Nash action of every agent in an `n`-agent game where all share `value`.
pub fn symmetric_nash_action(kind: GameKind, value: f64, capacity: f64, n: usize) -> f64 {
    let n = n as f64;
    match kind {
        GameKind::Cournot => value / (n + 1.0),
        GameKind::Kelly => value * capacity * (n - 1.0) / (n * n),
    }
}

/// Pure-strategy Nash equilibrium.
pub fn nash_equilibrium(spec: &GameSpec, config: &SolverConfig) -> Result<ActionProfile> {
    config.validate()?;
    spec.validate()?;
    if spec.kind() == GameKind::Cournot {
        // Interior solution of b_i − x_i − X = 0 for all i.
        let b = spec.params();
        let n = b.len() as f64;
        let total = b.iter().sum::<f64>() / (n + 1.0);
        let x: Vec<f64> = b.iter().map(|bi| bi - total).collect();
        if x.iter().all(|xi| *xi >= 0.0) {
            return Ok(ActionProfile::new(x));
        }
    }
    nash_by_iteration(spec, config)
}

/// Damped Gauss-Seidel best-response iteration from a strictly positive start.
///
/// Stops once every best response lies within `tolerance` of the current action.
pub fn nash_by_iteration(spec: &GameSpec, config: &SolverConfig) -> Result<ActionProfile> {
    config.validate()?;
    spec.validate()?;
    let n = spec.n_agents();
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let guess = symmetric_nash_action(spec.kind(), spec.param(i), spec.capacity(), n.max(2));
            guess.max(config.bid_floor)
        })
        .collect();
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iterations {
        residual = 0.0;
        for i in 0..n {
            let br = best_response(spec, i, game::others_total(&x, i))?;
            let step = br - x[i];
            residual = f64::max(residual, step.abs());
            x[i] += config.damping * step;
        }
        if residual < config.tolerance {
            // Damping only approaches a clamped corner geometrically; land on it.
            for i in 0..n {
                if best_response(spec, i, game::others_total(&x, i))? == 0.0 {
                    x[i] = 0.0;
                }
            }
            return Ok(ActionProfile::new(x));
        }
    }
    Err(SolverError::NonConvergence { iterations: config.max_iterations, residual, last: x })
}

/// Welfare-maximizing profile.
///
/// Cournot puts the aggregate `b_max/2` on the agents with the largest
/// valuation (equal split among ties). With linear Kelly utilities the welfare
/// supremum `V_max·C` is only approached as bids vanish, so the optimum is
/// taken subject to every bid being at least the configured bid floor.
pub fn social_optimum(spec: &GameSpec, config: &SolverConfig) -> Result<ActionProfile> {
    config.validate()?;
    spec.validate()?;
    let params = spec.params();
    let top = spec.max_param();
    let leaders: Vec<usize> = (0..params.len()).filter(|&i| params[i] == top).collect();
    let k = leaders.len() as f64;
    match spec {
        GameSpec::Cournot { .. } => {
            let share = top / 2.0 / k;
            Ok(ActionProfile::new(params.iter().map(|&b| if b == top { share } else { 0.0 }).collect()))
        }
        GameSpec::Kelly { capacity, .. } => {
            let floor = config.bid_floor;
            let followers: Vec<f64> = params.iter().copied().filter(|&v| v != top).collect();
            let rest_total = floor * followers.len() as f64;
            let rest_value = floor * followers.iter().sum::<f64>();
            // dW/dY = C·(V_max·M − s)/(Y + M)² − 1 for the leaders' total bid Y.
            let leaders_total = (capacity * (top * rest_total - rest_value)).sqrt() - rest_total;
            let lead_bid = (leaders_total / k).max(floor);
            Ok(ActionProfile::new(params.iter().map(|&v| if v == top { lead_bid } else { floor }).collect()))
        }
    }
}

/// Action of agent `i` solving the generalized first-order condition
/// `∂π_i/∂x_i + θ·Σ ∂π̂_j/∂x_i − γ·Σ (x_i − x_j) = 0` against fixed opponent
/// actions, using mirrored cross-gradients.
///
/// `opponents` lists every other agent's action in index order. A non-positive
/// left-hand side at `x_i = 0` yields the corner solution `0`.
pub fn generalized_best_response(
    spec: &GameSpec,
    i: usize,
    opponents: &[f64],
    theta: f64,
    gamma: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let n = spec.n_agents();
    if i >= n {
        return Err(GameError::AgentIndex { index: i, n }.into());
    }
    if opponents.len() + 1 != n {
        return Err(SolverError::InvalidArgument(format!(
            "expected {} opponent actions, got {}",
            n - 1,
            opponents.len()
        )));
    }
    if !(theta >= 0.0 && gamma >= 0.0) {
        return Err(SolverError::InvalidArgument(format!("theta and gamma must be >= 0, got {theta}, {gamma}")));
    }
    if let Some(x) = opponents.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(SolverError::InvalidArgument(format!("opponent actions must be finite and >= 0, got {x}")));
    }
    let others: f64 = opponents.iter().sum();
    if theta == 0.0 && gamma == 0.0 {
        return best_response(spec, i, others);
    }
    match spec.kind() {
        GameKind::Cournot => {
            let b = spec.param(i);
            // Σ_j x_j enters twice: through the price and through the disparity penalty.
            let numerator = b - (1.0 + theta) * others + gamma * others;
            let denominator = 2.0 + gamma * (n as f64 - 1.0);
            Ok((numerator / denominator).max(0.0))
        }
        GameKind::Kelly => {
            if others <= 0.0 {
                return Err(GameError::DegenerateMarket.into());
            }
            config.validate()?;
            let upper = config.bracket_upper_for(spec);
            let lhs = |x: f64| -> Result<f64> {
                let profile = with_action(opponents, i, x);
                Ok(game::first_order_residual(spec, &profile, i, theta, gamma)?)
            };
            bisect(lhs, 0.0, upper, config)
        }
    }
}

/// Rebuilds a full profile from opponent actions and agent `i`'s action.
pub(crate) fn with_action(opponents: &[f64], i: usize, x: f64) -> ActionProfile {
    let mut v = Vec::with_capacity(opponents.len() + 1);
    v.extend_from_slice(&opponents[..i]);
    v.push(x);
    v.extend_from_slice(&opponents[i..]);
    ActionProfile::new(v)
}

/// Root of a decreasing function on `[lower, upper]`; the lower end is returned
/// when `f(lower) <= 0`.
fn bisect(f: impl Fn(f64) -> Result<f64>, lower: f64, upper: f64, config: &SolverConfig) -> Result<f64> {
    let f_lower = f(lower)?;
    if f_lower <= 0.0 {
        return Ok(lower);
    }
    let f_upper = f(upper)?;
    if f_upper > 0.0 {
        return Err(SolverError::NoSignChange { lower, upper, f_lower, f_upper });
    }
    if f_upper == 0.0 {
        return Ok(upper);
    }
    let (mut lo, mut hi) = (lower, upper);
    for _ in 0..config.max_iterations {
        let mid = 0.5 * (lo + hi);
        let value = f(mid)?;
        if value.abs() <= config.tolerance || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(SolverError::NonConvergence { iterations: config.max_iterations, residual: f(mid)?.abs(), last: vec![mid] })
}
