//! Recovering `θ` and `γ` from observed play.
//!
//! Agent `i`'s round-`t` action answers the opponents' round-`(t−1)` actions, so
//! each estimate solves the internal first-order condition at the pair
//! (own round-`t` action, opponents' round-`(t−1)` actions). Round 1 uses the
//! same-round actions. One condition per round identifies only one parameter;
//! the regime decides which.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::dynamics;
use crate::agents::{AgentSpec, Observability};
use crate::engine::{EngineError, TrajectoryLog};
use crate::game::{self, ActionProfile, GameError, GameKind, GameSpec};
use crate::solvers::{self, with_action, SolverError};

mod fit;

pub use fit::{fit_dynamics, replay_error, DimensionDiagnostic, FitResult, SearchMethod, SearchSpace};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unidentifiable: {0}")]
    Unidentifiable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = InferenceError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `γ = 0`; solve for `θ`.
    Trust,
    /// `θ = 0`; solve for `γ`.
    Punishment,
    /// Both free, constant over a trailing window.
    Joint,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Trust => "trust",
            Regime::Punishment => "punishment",
            Regime::Joint => "joint",
        }
    }

    /// Regime implied by recorded parameters: trust when `γ = 0`, punishment
    /// when only `γ` is active.
    pub fn of(theta: f64, gamma: f64) -> Regime {
        match (theta > 0.0, gamma > 0.0) {
            (_, false) => Regime::Trust,
            (false, true) => Regime::Punishment,
            (true, true) => Regime::Joint,
        }
    }
}

/// Rule choosing the regime of each estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegimePolicy {
    /// Punishment when the deviation signal the action answers exceeds
    /// `threshold`, trust otherwise. The default threshold is the gap between
    /// the mirrored Nash opponent aggregate and the cooperative reference, so
    /// opponents at Nash still count as the trust regime.
    Threshold {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        /// Cooperative action per opponent; defaults to the mirrored social optimum.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coop_action: Option<f64>,
    },
    Trust,
    Punishment,
    /// Regime implied by each agent's recorded `(θ, γ)`; falls back to the
    /// threshold rule where nothing was recorded.
    Recorded,
    /// Least squares over the trailing `window` rounds.
    JointWindow { window: usize },
}

impl Default for RegimePolicy {
    fn default() -> Self {
        RegimePolicy::Threshold { threshold: None, coop_action: None }
    }
}

impl RegimePolicy {
    pub fn is_reconstruction(&self) -> bool {
        matches!(self, RegimePolicy::Threshold { .. } | RegimePolicy::Recorded)
    }
}

/// Which opponent parameters enter the cross-gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossGradients {
    /// The extracting agent's own parameter, as the agent itself would compute.
    #[default]
    Mirrored,
    /// The opponents' true parameters (diagnostics).
    True,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Terms {
    own: f64,
    cross: f64,
    disparity: f64,
}

fn terms(spec: &GameSpec, profile: &ActionProfile, i: usize, cross: CrossGradients) -> Result<Terms> {
    Ok(Terms {
        own: game::own_gradient(spec, profile, i)?,
        cross: match cross {
            CrossGradients::Mirrored => game::mirrored_cross_gradient_sum(spec, profile, i)?,
            CrossGradients::True => game::true_cross_gradient_sum(spec, profile, i)?,
        },
        disparity: game::disparity_sum(profile, i),
    })
}

impl Terms {
    fn residual(&self, theta: f64, gamma: f64) -> f64 {
        self.own + theta * self.cross - gamma * self.disparity
    }
}

/// `(θ, γ)` making agent `i`'s first-order condition hold at `profile` under a
/// single-parameter regime.
pub fn extract_round(spec: &GameSpec, i: usize, profile: &ActionProfile, regime: Regime) -> Result<(f64, f64)> {
    extract_round_with(spec, i, profile, regime, CrossGradients::Mirrored)
}

pub fn extract_round_with(
    spec: &GameSpec,
    i: usize,
    profile: &ActionProfile,
    regime: Regime,
    cross: CrossGradients,
) -> Result<(f64, f64)> {
    let t = terms(spec, profile, i, cross)?;
    // Denominators at rounding-noise level carry no information.
    let scale = profile.actions().iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let negligible = |d: f64| d.abs() <= 1e-9 * scale;
    match regime {
        Regime::Trust => {
            if t.cross == 0.0 {
                return Err(InferenceError::Unidentifiable("opponent actions are zero; trust weight has no effect".into()));
            }
            Ok((t.own / -t.cross, 0.0))
        }
        Regime::Punishment => {
            if negligible(t.disparity) {
                return Err(InferenceError::Unidentifiable("no action disparity; stability weight has no effect".into()));
            }
            Ok((0.0, t.own / t.disparity))
        }
        Regime::Joint => Err(InferenceError::InvalidArgument("joint estimates need a window of rounds".into())),
    }
}

/// Least-squares `(θ, γ)` constant over several first-order conditions.
pub fn extract_joint(spec: &GameSpec, i: usize, profiles: &[ActionProfile], cross: CrossGradients) -> Result<(f64, f64)> {
    if profiles.len() < 2 {
        return Err(InferenceError::InvalidArgument(format!("joint window needs >= 2 rounds, got {}", profiles.len())));
    }
    // Rows: cross·θ − disparity·γ = −own.
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in profiles {
        let t = terms(spec, p, i, cross)?;
        let (u, v, y) = (t.cross, -t.disparity, -t.own);
        a11 += u * u;
        a12 += u * v;
        a22 += v * v;
        r1 += u * y;
        r2 += v * y;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 * a22).max(f64::MIN_POSITIVE) {
        return Err(InferenceError::Unidentifiable("window rows are collinear".into()));
    }
    Ok(((r1 * a22 - r2 * a12) / det, (a11 * r2 - a12 * r1) / det))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEstimate {
    pub round: usize,
    pub agent: usize,
    pub regime: Regime,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    /// First-order residual at the estimates.
    pub residual: Option<f64>,
    /// Why no estimate was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<String>,
}

impl RoundEstimate {
    pub fn is_gap(&self) -> bool {
        self.gap.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub policy: RegimePolicy,
    pub cross_gradients: CrossGradients,
    /// Set when the regime rule is a reconstruction rather than an observed fact.
    pub reconstructed_regimes: bool,
    pub estimates: Vec<RoundEstimate>,
}

impl ExtractionResult {
    pub fn get(&self, round: usize, agent: usize) -> Option<&RoundEstimate> {
        self.estimates.iter().find(|e| e.round == round && e.agent == agent)
    }

    /// `θ` estimates for one agent, in round order.
    pub fn theta_series(&self, agent: usize) -> Vec<Option<f64>> {
        self.estimates.iter().filter(|e| e.agent == agent).map(|e| e.theta).collect()
    }

    pub fn gaps(&self) -> usize {
        self.estimates.iter().filter(|e| e.is_gap()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EngineError> {
        let mut out = out;
        writeln!(out, "# policy: {}", serde_json::to_string(&self.policy)?)?;
        writeln!(out, "# cross_gradients: {}", serde_json::to_string(&self.cross_gradients)?)?;
        if self.reconstructed_regimes {
            writeln!(out, "# regime selection: reconstructed threshold rule, not an observed label")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "agent", "theta", "gamma", "regime", "residual"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.estimates {
            w.write_record([
                e.round.to_string(),
                e.agent.to_string(),
                opt(e.theta),
                opt(e.gamma),
                e.regime.label().to_string(),
                opt(e.residual),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The action profile agent `i`'s round-`t` choice answered.
pub fn response_profile(log: &TrajectoryLog, i: usize, t: usize) -> Option<ActionProfile> {
    let own = log.round(t)?.actions[i];
    let reference = log.round(if t > 1 { t - 1 } else { t })?;
    let opponents: Vec<f64> = reference.actions.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
    Some(with_action(&opponents, i, own))
}

/// Deviation threshold and cooperative opponent aggregate used by the default
/// regime rule for agent `i`.
fn threshold_for(spec: &GameSpec, i: usize, threshold: Option<f64>, coop_action: Option<f64>, floor: f64) -> (f64, f64) {
    let n = spec.n_agents();
    let v = spec.param(i);
    let coop = coop_action.unwrap_or(match spec.kind() {
        GameKind::Cournot => v / (2.0 * n as f64),
        GameKind::Kelly => floor,
    });
    let coop_others = coop * (n - 1) as f64;
    let nash_others = solvers::symmetric_nash_action(spec.kind(), v, spec.capacity(), n) * (n - 1) as f64;
    (threshold.unwrap_or(nash_others - coop_others), coop_others)
}

/// Applies `extract_round` to every agent and round of an open-information log.
/// Unidentifiable or perturbed rounds become flagged gaps.
pub fn extract_trajectory(log: &TrajectoryLog, policy: &RegimePolicy) -> Result<ExtractionResult> {
    extract_trajectory_with(log, policy, CrossGradients::Mirrored)
}

pub fn extract_trajectory_with(log: &TrajectoryLog, policy: &RegimePolicy, cross: CrossGradients) -> Result<ExtractionResult> {
    if log.config.observability != Observability::OpenInfo {
        return Err(InferenceError::InvalidArgument("extraction needs individual opponent actions (open-info log)".into()));
    }
    if let RegimePolicy::JointWindow { window } = policy {
        if *window < 2 {
            return Err(InferenceError::InvalidArgument(format!("joint window must be >= 2, got {window}")));
        }
    }
    let spec = &log.config.game;
    let n = spec.n_agents();
    let mut estimates = Vec::with_capacity(log.rounds.len() * n);
    for record in &log.rounds {
        let t = record.round;
        for i in 0..n {
            let profile = response_profile(log, i, t).expect("round within log");
            let regime = choose_regime(log, policy, i, t);
            let mut est = RoundEstimate { round: t, agent: i, regime, theta: None, gamma: None, residual: None, gap: None };
            if record.perturbed[i] {
                est.gap = Some("action was forced by a perturbation".into());
                estimates.push(est);
                continue;
            }
            let result = match policy {
                RegimePolicy::JointWindow { window } => {
                    let start = t.saturating_sub(*window - 1).max(1);
                    let rows: Vec<ActionProfile> = (start..=t)
                        .filter(|&k| !log.rounds[k - 1].perturbed[i])
                        .filter_map(|k| response_profile(log, i, k))
                        .collect();
                    extract_joint(spec, i, &rows, cross)
                }
                _ => extract_round_with(spec, i, &profile, regime, cross),
            };
            match result {
                Ok((theta, gamma)) => {
                    est.theta = Some(theta);
                    est.gamma = Some(gamma);
                    est.residual = Some(terms(spec, &profile, i, cross)?.residual(theta, gamma));
                }
                Err(InferenceError::Unidentifiable(why) | InferenceError::InvalidArgument(why)) => est.gap = Some(why),
                Err(InferenceError::Game(GameError::DegenerateMarket)) => est.gap = Some("degenerate market".into()),
                Err(e) => return Err(e),
            }
            estimates.push(est);
        }
    }
    Ok(ExtractionResult {
        policy: policy.clone(),
        cross_gradients: cross,
        reconstructed_regimes: policy.is_reconstruction(),
        estimates,
    })
}

fn choose_regime(log: &TrajectoryLog, policy: &RegimePolicy, i: usize, t: usize) -> Regime {
    let threshold_rule = |threshold: Option<f64>, coop_action: Option<f64>| {
        let (limit, coop_others) = threshold_for(&log.config.game, i, threshold, coop_action, log.config.bid_floor);
        let reference = log.round(t.saturating_sub(1).max(1)).expect("round within log");
        let observed = game::others_total(&reference.actions, i);
        if t > 1 && observed - coop_others > limit {
            Regime::Punishment
        } else {
            Regime::Trust
        }
    };
    match policy {
        RegimePolicy::Trust => Regime::Trust,
        RegimePolicy::Punishment => Regime::Punishment,
        RegimePolicy::JointWindow { .. } => Regime::Joint,
        RegimePolicy::Threshold { threshold, coop_action } => threshold_rule(*threshold, *coop_action),
        RegimePolicy::Recorded => match log.round(t).and_then(|r| r.social[i]) {
            Some(s) => Regime::of(s.theta, s.gamma),
            None => {
                let coop = match log.config.agents.get(i) {
                    Some(AgentSpec::Synthetic { coop_action, .. }) => *coop_action,
                    _ => None,
                };
                threshold_rule(None, coop)
            }
        },
    }
}

/// Per-round cost of parity for every agent against the same round's opponent
/// actions. Indexed `[round − 1][agent]`.
pub fn cost_of_parity_series(log: &TrajectoryLog) -> Result<Vec<Vec<f64>>> {
    let spec = &log.config.game;
    log.rounds
        .iter()
        .map(|r| {
            (0..spec.n_agents())
                .map(|i| {
                    let opponents: Vec<f64> =
                        r.actions.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
                    dynamics::cost_of_parity(spec, i, &opponents).map_err(|e| match e {
                        crate::agents::AgentError::Game(g) => InferenceError::Game(g),
                        crate::agents::AgentError::Solver(s) => InferenceError::Solver(s),
                        other => InferenceError::InvalidArgument(other.to_string()),
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cournot15() -> GameSpec {
        GameSpec::cournot(vec![15.0, 15.0]).unwrap()
    }

    fn p(x: &[f64]) -> ActionProfile {
        ActionProfile::new(x.to_vec())
    }

    #[test]
    fn trust_extraction() {
        let s = cournot15();
        assert_eq!(extract_round(&s, 0, &p(&[4.0, 5.0]), Regime::Trust).unwrap(), (0.4, 0.0));
        assert_eq!(extract_round(&s, 0, &p(&[5.0, 5.0]), Regime::Trust).unwrap(), (0.0, 0.0));
        assert_eq!(extract_round(&s, 0, &p(&[3.75, 4.0]), Regime::Trust).unwrap().0, 0.875);
        assert_eq!(extract_round(&s, 1, &p(&[4.0, 3.75]), Regime::Trust).unwrap().0, 0.875);
        assert!((extract_round(&s, 0, &p(&[4.5, 3.75]), Regime::Trust).unwrap().0 - 0.6).abs() < 1e-12);
        assert!(matches!(extract_round(&s, 0, &p(&[4.0, 0.0]), Regime::Trust), Err(InferenceError::Unidentifiable(_))));
    }

    #[test]
    fn punishment_extraction() {
        let s = cournot15();
        assert_eq!(extract_round(&s, 0, &p(&[5.0, 5.625]), Regime::Punishment).unwrap(), (0.0, 1.0));
        assert!(extract_round(&s, 0, &p(&[5.0, 5.0]), Regime::Punishment).is_err());
    }

    #[test]
    fn joint_recovers_constant_pair() {
        let s = GameSpec::cournot(vec![15.0, 15.0, 15.0]).unwrap();
        let (theta, gamma) = (0.3, 0.7);
        let rows: Vec<ActionProfile> = [[4.0, 3.0], [5.0, 2.0], [2.0, 2.5]]
            .iter()
            .map(|o| {
                let x = solvers::generalized_best_response(&s, 0, o, theta, gamma, &Default::default()).unwrap();
                with_action(o, 0, x)
            })
            .collect();
        let (t, g) = extract_joint(&s, 0, &rows, CrossGradients::Mirrored).unwrap();
        assert!((t - theta).abs() < 1e-9 && (g - gamma).abs() < 1e-9);
        assert!(extract_joint(&s, 0, &rows[..1], CrossGradients::Mirrored).is_err());
    }

    #[test]
    fn scale_consistency() {
        let s = cournot15();
        let base = extract_round(&s, 0, &p(&[4.0, 5.0]), Regime::Trust).unwrap().0;
        let scaled = extract_round(&GameSpec::cournot(vec![45.0, 45.0]).unwrap(), 0, &p(&[12.0, 15.0]), Regime::Trust).unwrap().0;
        assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn mirrored_and_true_cross_gradients_differ_when_asymmetric() {
        let s = GameSpec::kelly_unit(vec![2.0, 1.0]).unwrap();
        let prof = p(&[0.3, 0.2]);
        let m = extract_round_with(&s, 0, &prof, Regime::Trust, CrossGradients::Mirrored).unwrap().0;
        let t = extract_round_with(&s, 0, &prof, Regime::Trust, CrossGradients::True).unwrap().0;
        assert!((m * 2.0 - t).abs() < 1e-12);
    }

    #[test]
    fn default_threshold() {
        let (limit, coop) = threshold_for(&cournot15(), 0, None, None, 1e-3);
        assert_eq!((limit, coop), (1.25, 3.75));
    }

    #[test]
    fn regime_from_record() {
        assert_eq!(Regime::of(0.4, 0.0), Regime::Trust);
        assert_eq!(Regime::of(0.0, 1.0), Regime::Punishment);
        assert_eq!(Regime::of(0.0, 0.0), Regime::Trust);
        assert_eq!(Regime::of(0.1, 1.0), Regime::Joint);
    }
}
