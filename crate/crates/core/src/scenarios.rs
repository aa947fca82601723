//! Named experiments with numeric checkpoints.
//!
//! Trajectory checkpoints may be anchored to a round or to the first round whose
//! action pair matches a given pair, so that a check does not depend on exactly
//! when a configuration is reached.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentSpec, DynamicsConstants, Observability, ParameterOverride, ScriptStep, Tolerance};
use crate::engine::{self, EngineError, MatchConfig, Perturbation, TrajectoryLog};
use crate::game::{self, GameKind, GameSpec};
use crate::inference::{self, ExtractionResult, InferenceError, RegimePolicy};
use crate::pareto::{self, ParetoSample, ReferencePoint};
use crate::solvers::{self, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("match did not complete: {0:?}")]
    Incomplete(engine::MatchStatus),
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error("invalid scenario argument: {0}")]
    InvalidArgument(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ScenarioError> = std::result::Result<T, E>;

pub const NAMES: [&str; 6] =
    ["trust-buildup", "betrayal-forgiveness", "endgame", "information-modes", "asymmetry-sweep", "pareto-figure"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Round(usize),
    /// First round whose two actions equal this pair.
    Pair([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Action,
    ExtractedTheta,
    ExtractedGamma,
    RecordedTheta,
    RecordedGamma,
    /// Action minus the best response to the previous round's opponent actions.
    BestResponseGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Near { value: f64, tolerance: f64 },
    AtMost(f64),
    Above(f64),
}

impl Expect {
    pub fn near(value: f64) -> Self {
        Expect::Near { value, tolerance: 1e-9 }
    }

    pub fn accepts(&self, x: f64) -> bool {
        match *self {
            Expect::Near { value, tolerance } => (x - value).abs() <= tolerance,
            Expect::AtMost(v) => x <= v,
            Expect::Above(v) => x > v,
        }
    }
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expect::Near { value, tolerance } => write!(f, "{value} ± {tolerance:e}"),
            Expect::AtMost(v) => write!(f, "<= {v}"),
            Expect::Above(v) => write!(f, "> {v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub label: String,
    pub agent: usize,
    pub at: Anchor,
    pub quantity: Quantity,
    pub expect: Expect,
}

impl Checkpoint {
    pub fn new(label: &str, agent: usize, at: Anchor, quantity: Quantity, expect: Expect) -> Self {
        Checkpoint { label: label.into(), agent, at, quantity, expect }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointResult {
    pub label: String,
    pub expected: String,
    pub observed: Option<f64>,
    pub round: Option<usize>,
    pub passed: bool,
}

impl CheckpointResult {
    pub fn check(label: &str, expect: Expect, observed: f64, round: Option<usize>) -> Self {
        CheckpointResult {
            label: label.into(),
            expected: expect.to_string(),
            observed: Some(observed),
            round,
            passed: expect.accepts(observed),
        }
    }

    pub fn holds(label: &str, ok: bool) -> Self {
        CheckpointResult { label: label.into(), expected: "holds".into(), observed: None, round: None, passed: ok }
    }
}

impl fmt::Display for CheckpointResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: expected {}", self.label, self.expected)?;
        if let Some(x) = self.observed {
            write!(f, ", observed {x}")?;
        }
        if let Some(r) = self.round {
            write!(f, " (round {r})")?;
        }
        Ok(())
    }
}

/// Everything needed to rerun a scenario, embedded in each file it emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<MatchConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<Checkpoint>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub parameters: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ScenarioSpec {
    fn new(name: &str, description: &str) -> Self {
        ScenarioSpec {
            name: name.into(),
            description: description.into(),
            config: None,
            checkpoints: Vec::new(),
            parameters: serde_json::Value::Null,
            notes: Vec::new(),
        }
    }

    /// Every round-anchored checkpoint must lie within the configured horizon.
    pub fn validate(&self) -> Result<()> {
        let Some(config) = &self.config else { return Ok(()) };
        for cp in &self.checkpoints {
            if let Anchor::Round(t) = cp.at {
                if t == 0 || t > config.horizon {
                    return Err(ScenarioError::InvalidArgument(format!(
                        "checkpoint `{}` references round {t} outside 1..={}",
                        cp.label, config.horizon
                    )));
                }
            }
            if cp.agent >= config.game.n_agents() {
                return Err(ScenarioError::InvalidArgument(format!("checkpoint `{}` references agent {}", cp.label, cp.agent)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub spec: ScenarioSpec,
    pub logs: Vec<TrajectoryLog>,
    pub extraction: Option<ExtractionResult>,
    pub results: Vec<CheckpointResult>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    pub files: Vec<OutputFile>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&CheckpointResult> {
        self.results.iter().filter(|r| !r.passed).collect()
    }

    pub fn log(&self) -> Option<&TrajectoryLog> {
        self.logs.first()
    }

    /// Writes every output file under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in &self.files {
            let path = dir.join(&f.name);
            fs::write(&path, &f.contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioOptions {
    /// Run independent sweep points concurrently.
    pub parallel: bool,
}

pub fn run(name: &str, options: &ScenarioOptions) -> Result<ScenarioReport> {
    match name {
        "trust-buildup" => trust_buildup(),
        "betrayal-forgiveness" => betrayal_forgiveness(),
        "endgame" => endgame(),
        "information-modes" => information_modes(&InformationModes::default()),
        "asymmetry-sweep" => {
            asymmetry_sweep(&SweepParams { parallel: options.parallel, ..SweepParams::default() }).map(|s| s.report)
        }
        "pareto-figure" => pareto_figure(&ParetoParams::default()).map(|p| p.report),
        other => Err(ScenarioError::Unknown(other.into())),
    }
}

fn cournot15() -> GameSpec {
    GameSpec::cournot(vec![15.0, 15.0]).expect("valid game")
}

fn overrides(entries: &[(usize, f64, f64)]) -> Vec<ParameterOverride> {
    entries.iter().map(|&(round, theta, gamma)| ParameterOverride { round, theta, gamma }).collect()
}

fn synthetic_with(overrides: Vec<ParameterOverride>) -> AgentSpec {
    AgentSpec::Synthetic {
        constants: DynamicsConstants::default(),
        coop_action: None,
        overrides,
        solver: SolverConfig::default(),
    }
}

/// Staggered concession followed by the endgame: agent 0 moves first, agent 1
/// follows one round later, both hold the cooperative quantity, and agent 0
/// partially defects in round 9. Round 10 runs the update law, whose horizon
/// factor forces pure best response.
pub fn canonical_config() -> MatchConfig {
    let lead = overrides(&[
        (2, 0.4, 0.0),
        (3, 0.5, 0.0),
        (4, 0.875, 0.0),
        (5, 1.0, 0.0),
        (6, 1.0, 0.0),
        (7, 1.0, 0.0),
        (8, 1.0, 0.0),
        (9, 0.6, 0.0),
    ]);
    let follow = overrides(&[
        (2, 0.0, 0.0),
        (3, 0.75, 0.0),
        (4, 1.0, 0.0),
        (5, 1.0, 0.0),
        (6, 1.0, 0.0),
        (7, 1.0, 0.0),
        (8, 1.0, 0.0),
        (9, 1.0, 0.0),
    ]);
    let mut c = MatchConfig::new(cournot15(), 10, vec![synthetic_with(lead), synthetic_with(follow)]);
    c.match_id = Some("canonical".into());
    c
}

fn evaluate(log: &TrajectoryLog, extraction: &ExtractionResult, cp: &Checkpoint) -> CheckpointResult {
    let round = match cp.at {
        Anchor::Round(t) => log.round(t).map(|r| r.round),
        Anchor::Pair(pair) => log
            .rounds
            .iter()
            .find(|r| r.actions.len() == 2 && (r.actions[0] - pair[0]).abs() <= 1e-9 && (r.actions[1] - pair[1]).abs() <= 1e-9)
            .map(|r| r.round),
    };
    let observed = round.and_then(|t| {
        let r = log.round(t)?;
        let est = extraction.get(t, cp.agent);
        match cp.quantity {
            Quantity::Action => Some(r.actions[cp.agent]),
            Quantity::ExtractedTheta => est?.theta,
            Quantity::ExtractedGamma => est?.gamma,
            Quantity::RecordedTheta => r.social[cp.agent].map(|s| s.theta),
            Quantity::RecordedGamma => r.social[cp.agent].map(|s| s.gamma),
            Quantity::BestResponseGap => {
                let prev = log.round(t.checked_sub(1)?)?;
                let br = solvers::best_response(&log.config.game, cp.agent, game::others_total(&prev.actions, cp.agent)).ok()?;
                Some(r.actions[cp.agent] - br)
            }
        }
    });
    match observed {
        Some(x) => CheckpointResult::check(&cp.label, cp.expect, x, round),
        None => CheckpointResult {
            label: cp.label.clone(),
            expected: cp.expect.to_string(),
            observed: None,
            round,
            passed: false,
        },
    }
}

fn trajectory_report(mut spec: ScenarioSpec, config: MatchConfig) -> Result<ScenarioReport> {
    spec.config = Some(config.clone());
    spec.validate()?;
    let mut log = engine::run_match(&config)?;
    if !log.is_complete() {
        return Err(ScenarioError::Incomplete(log.status));
    }
    log.metadata = Some(serde_json::to_value(&spec)?);
    let extraction = inference::extract_trajectory(&log, &RegimePolicy::default())?;
    let results: Vec<CheckpointResult> = spec.checkpoints.iter().map(|cp| evaluate(&log, &extraction, cp)).collect();

    let mut summary = vec![format!("{}: {}", spec.name, spec.description)];
    for r in &log.rounds {
        let est: Vec<String> = (0..r.actions.len())
            .map(|i| match extraction.get(r.round, i) {
                Some(e) if !e.is_gap() => format!(
                    "{}(θ={:.4}, γ={:.4})",
                    e.regime.label(),
                    e.theta.unwrap_or(f64::NAN),
                    e.gamma.unwrap_or(f64::NAN)
                ),
                _ => "gap".into(),
            })
            .collect();
        summary.push(format!("round {:>2}: actions {:?} welfare {:.4} extracted {}", r.round, r.actions, r.outcome.welfare(), est.join(", ")));
    }
    summary.extend(results.iter().map(|r| r.to_string()));

    let spec_json = serde_json::to_string(&spec)?;
    let mut csv = Vec::new();
    engine::export_csv(&log, &[("scenario", spec_json.clone())], &mut csv)?;
    let mut ext_csv = format!("# scenario: {spec_json}\n").into_bytes();
    extraction.write_csv(&mut ext_csv)?;
    let files = vec![
        OutputFile { name: format!("{}.jsonl", spec.name), contents: engine::persist_string(&log)? },
        OutputFile { name: format!("{}.csv", spec.name), contents: String::from_utf8_lossy(&csv).into_owned() },
        OutputFile { name: format!("{}-extraction.csv", spec.name), contents: String::from_utf8_lossy(&ext_csv).into_owned() },
    ];
    Ok(ScenarioReport { spec, logs: vec![log], extraction: Some(extraction), results, summary, files })
}

pub fn trust_buildup() -> Result<ScenarioReport> {
    use Quantity::*;
    let mut spec = ScenarioSpec::new(
        "trust-buildup",
        "symmetric Cournot b=15, T=10, staggered concession from Nash to the cooperative quantity",
    );
    spec.checkpoints = vec![
        Checkpoint::new("round-1 action of agent 0", 0, Anchor::Round(1), Action, Expect::near(5.0)),
        Checkpoint::new("round-1 action of agent 1", 1, Anchor::Round(1), Action, Expect::near(5.0)),
        Checkpoint::new("agent 0 theta at (4, 5)", 0, Anchor::Pair([4.0, 5.0]), ExtractedTheta, Expect::near(0.4)),
        Checkpoint::new("agent 1 theta at (4, 5)", 1, Anchor::Pair([4.0, 5.0]), ExtractedTheta, Expect::near(0.0)),
        Checkpoint::new("agent 0 theta at (3.75, 4)", 0, Anchor::Pair([3.75, 4.0]), ExtractedTheta, Expect::near(0.5)),
        Checkpoint::new("agent 1 theta at (3.75, 4)", 1, Anchor::Pair([3.75, 4.0]), ExtractedTheta, Expect::near(0.75)),
        Checkpoint::new("agent 0 theta at first (3.75, 3.75)", 0, Anchor::Pair([3.75, 3.75]), ExtractedTheta, Expect::near(0.875)),
        Checkpoint::new("agent 1 theta at first (3.75, 3.75)", 1, Anchor::Pair([3.75, 3.75]), ExtractedTheta, Expect::near(1.0)),
        Checkpoint::new("agent 0 theta in round 5", 0, Anchor::Round(5), ExtractedTheta, Expect::near(1.0)),
        Checkpoint::new("agent 1 theta in round 5", 1, Anchor::Round(5), ExtractedTheta, Expect::near(1.0)),
        Checkpoint::new("agent 0 action in round 5", 0, Anchor::Round(5), Action, Expect::near(3.75)),
        Checkpoint::new("agent 1 action in round 5", 1, Anchor::Round(5), Action, Expect::near(3.75)),
    ];
    spec.notes.push(
        "each estimate pairs an agent's action with the opponent actions it answered (the previous round)".into(),
    );
    trajectory_report(spec, canonical_config())
}

pub fn endgame() -> Result<ScenarioReport> {
    use Quantity::*;
    let mut spec = ScenarioSpec::new("endgame", "the cooperative run of trust-buildup through its final rounds");
    spec.checkpoints = vec![
        Checkpoint::new("agent 0 theta at (4.5, 3.75)", 0, Anchor::Pair([4.5, 3.75]), ExtractedTheta, Expect::near(0.6)),
        Checkpoint::new("agent 0 recorded theta in the final round", 0, Anchor::Round(10), RecordedTheta, Expect::near(0.0)),
        Checkpoint::new("agent 0 recorded gamma in the final round", 0, Anchor::Round(10), RecordedGamma, Expect::near(0.0)),
        Checkpoint::new("agent 1 recorded theta in the final round", 1, Anchor::Round(10), RecordedTheta, Expect::near(0.0)),
        Checkpoint::new("agent 0 final action is a best response", 0, Anchor::Round(10), BestResponseGap, Expect::near(0.0)),
        Checkpoint::new("agent 1 final action is a best response", 1, Anchor::Round(10), BestResponseGap, Expect::near(0.0)),
        Checkpoint::new("agent 0 final action", 0, Anchor::Round(10), Action, Expect::near(5.625)),
        Checkpoint::new("agent 1 final action", 1, Anchor::Round(10), Action, Expect::near(5.25)),
    ];
    spec.notes.push(
        "5.25 is agent 1's best response to agent 0's round-9 quantity 4.5; the best response to 3.75 is 5.625".into(),
    );
    trajectory_report(spec, canonical_config())
}

/// Cooperative play, a forced defection to 5.625 in round 6, a forced
/// over-correction to 2.5 in round 7, then a return to cooperation.
pub fn betrayal_config() -> MatchConfig {
    let responder = overrides(&[
        (2, 0.4, 0.0),
        (3, 0.5, 0.0),
        (4, 0.875, 0.0),
        (5, 1.0, 0.0),
        (6, 1.0, 0.0),
        (7, 0.0, 1.0),
        (8, 1.0, 0.0),
        (9, 1.0, 0.0),
    ]);
    let script = [5.0, 5.0, 4.0, 3.75, 3.75, 3.75, 3.75, 3.75, 3.75]
        .iter()
        .enumerate()
        .map(|(k, &action)| ScriptStep { round: k + 1, action })
        .collect();
    let opponent = AgentSpec::Scripted { steps: script, fallback: Some(Box::new(AgentSpec::myopic())) };
    let mut c = MatchConfig::new(cournot15(), 10, vec![synthetic_with(responder), opponent]);
    c.perturbations = vec![
        Perturbation { round: 6, agent: 1, action: 5.625 },
        Perturbation { round: 7, agent: 1, action: 2.5 },
    ];
    c.match_id = Some("betrayal".into());
    c
}

pub fn betrayal_forgiveness() -> Result<ScenarioReport> {
    use Quantity::*;
    let mut spec = ScenarioSpec::new(
        "betrayal-forgiveness",
        "forced defection and corrective under-production against a cooperating synthetic agent",
    );
    spec.checkpoints = vec![
        Checkpoint::new("defection is forced in round 6", 1, Anchor::Round(6), Action, Expect::near(5.625)),
        Checkpoint::new("retaliation action", 0, Anchor::Pair([5.0, 2.5]), Action, Expect::near(5.0)),
        Checkpoint::new("retaliation gamma", 0, Anchor::Pair([5.0, 2.5]), ExtractedGamma, Expect::near(1.0)),
        Checkpoint::new("retaliation theta", 0, Anchor::Pair([5.0, 2.5]), ExtractedTheta, Expect::near(0.0)),
        Checkpoint::new("forgiveness theta", 0, Anchor::Pair([5.0, 3.75]), ExtractedTheta, Expect::near(1.0)),
        Checkpoint::new("forgiveness gamma", 0, Anchor::Pair([5.0, 3.75]), ExtractedGamma, Expect::near(0.0)),
        Checkpoint::new("return to cooperation", 0, Anchor::Round(9), Action, Expect::near(3.75)),
        Checkpoint::new("theta after return", 0, Anchor::Round(9), ExtractedTheta, Expect::near(1.0)),
        Checkpoint::new("gamma after return", 0, Anchor::Round(9), ExtractedGamma, Expect::near(0.0)),
    ];
    spec.notes.push(
        "at (θ=1, γ=0) the answer to 2.5 is 5.0, which restores the cooperative aggregate 7.5; 3.75 follows once the opponent is back at 3.75".into(),
    );
    trajectory_report(spec, betrayal_config())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationModes {
    pub valuation: f64,
    pub agents: usize,
    pub horizon: usize,
    pub seed: u64,
    pub constants: DynamicsConstants,
}

impl Default for InformationModes {
    fn default() -> Self {
        InformationModes { valuation: 15.0, agents: 2, horizon: 10, seed: 0, constants: DynamicsConstants::default() }
    }
}

impl InformationModes {
    pub fn config(&self, mode: Observability) -> Result<MatchConfig> {
        let game = GameSpec::symmetric(GameKind::Cournot, self.valuation, 1.0, self.agents)
            .map_err(|e| ScenarioError::InvalidArgument(e.to_string()))?;
        let agent = AgentSpec::Synthetic {
            constants: self.constants,
            coop_action: None,
            overrides: Vec::new(),
            solver: SolverConfig::default(),
        };
        let mut c = MatchConfig::new(game, self.horizon, vec![agent; self.agents]);
        c.observability = mode;
        c.seed = self.seed;
        Ok(c)
    }
}

/// Total welfare over the match.
pub fn total_welfare(log: &TrajectoryLog) -> f64 {
    log.welfare().iter().sum()
}

pub fn information_modes(params: &InformationModes) -> Result<ScenarioReport> {
    let mut spec = ScenarioSpec::new(
        "information-modes",
        "the same synthetic roster under open information and aggregate-only information",
    );
    spec.parameters = serde_json::to_value(params)?;
    let mut logs = Vec::new();
    for mode in [Observability::OpenInfo, Observability::AggregateOnly] {
        let config = params.config(mode)?;
        let mut log = engine::run_match(&config)?;
        if !log.is_complete() {
            return Err(ScenarioError::Incomplete(log.status));
        }
        log.metadata = Some(serde_json::to_value(&spec)?);
        logs.push(log);
    }
    let (open, blind) = (&logs[0], &logs[1]);
    let eps = params.constants.epsilon;
    let horizon = params.horizon as f64;
    let capped = blind.rounds.iter().all(|r| {
        let cap = eps * (params.horizon - r.round) as f64 / horizon;
        r.social.iter().all(|s| s.is_some_and(|s| s.theta <= cap + 1e-15))
    });
    let max_blind_theta =
        blind.rounds.iter().flat_map(|r| r.social.iter().flatten().map(|s| s.theta)).fold(0.0, f64::max);
    let (w_open, w_blind) = (total_welfare(open), total_welfare(blind));
    let results = vec![
        CheckpointResult::holds("aggregate-only theta within epsilon·τ/T", capped),
        CheckpointResult::check("aggregate-only max theta", Expect::AtMost(eps), max_blind_theta, None),
        CheckpointResult::check("open minus aggregate-only total welfare", Expect::Above(0.0), w_open - w_blind, None),
    ];

    let mut summary = vec![format!("information-modes: {} agents, b = {}, T = {}", params.agents, params.valuation, params.horizon)];
    let mut table = String::from("round,mode,welfare,theta_mean\n");
    for (label, log) in [("open_info", open), ("aggregate_only", blind)] {
        for r in &log.rounds {
            let thetas: Vec<f64> = r.social.iter().flatten().map(|s| s.theta).collect();
            let mean = thetas.iter().sum::<f64>() / thetas.len().max(1) as f64;
            table.push_str(&format!("{},{label},{},{mean}\n", r.round, r.outcome.welfare()));
        }
        summary.push(format!(
            "{label}: total welfare {:.6}, per-round {:?}",
            total_welfare(log),
            log.welfare().iter().map(|w| (w * 1e4).round() / 1e4).collect::<Vec<_>>()
        ));
    }
    summary.extend(results.iter().map(|r| r.to_string()));
    let spec_json = serde_json::to_string(&spec)?;
    let files = vec![
        OutputFile { name: "information-modes.csv".into(), contents: format!("# scenario: {spec_json}\n{table}") },
        OutputFile { name: "information-modes-open.jsonl".into(), contents: engine::persist_string(open)? },
        OutputFile { name: "information-modes-aggregate.jsonl".into(), contents: engine::persist_string(blind)? },
    ];
    Ok(ScenarioReport { spec, logs, extraction: None, results, summary, files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Parity,
    BestResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub mean_valuation: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub steps: usize,
    pub horizon: usize,
    pub omega_max: Tolerance,
    /// Relative action gap below which a run counts as parity.
    pub parity_band: f64,
    pub parallel: bool,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            mean_valuation: 12.5,
            delta_min: 0.0,
            delta_max: 10.0,
            steps: 41,
            horizon: 10,
            omega_max: Tolerance::default(),
            parity_band: 0.05,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta_b: f64,
    pub valuations: [f64; 2],
    /// Actions in the last round before the final one.
    pub actions: [f64; 2],
    pub relative_gap: f64,
    pub behavior: Behavior,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Smallest swept `Δb` labeled best-response.
    pub transition: Option<f64>,
    /// Number of label changes along the sweep.
    pub switches: usize,
    pub report: ScenarioReport,
}

pub fn sweep_point(params: &SweepParams, delta_b: f64) -> Result<SweepPoint> {
    let b = [params.mean_valuation + delta_b / 2.0, params.mean_valuation - delta_b / 2.0];
    let game = GameSpec::cournot(b.to_vec()).map_err(|e| ScenarioError::InvalidArgument(e.to_string()))?;
    let agent = AgentSpec::Synthetic {
        constants: DynamicsConstants { omega_max: params.omega_max, ..DynamicsConstants::default() },
        coop_action: None,
        overrides: Vec::new(),
        solver: SolverConfig::default(),
    };
    let log = engine::run_match(&MatchConfig::new(game, params.horizon, vec![agent; 2]))?;
    if !log.is_complete() {
        return Err(ScenarioError::Incomplete(log.status));
    }
    let t = params.horizon.saturating_sub(1).max(1);
    let x = &log.round(t).expect("round within horizon").actions;
    let scale = x[0].abs().max(x[1].abs());
    let relative_gap = if scale == 0.0 { 0.0 } else { (x[0] - x[1]).abs() / scale };
    Ok(SweepPoint {
        delta_b,
        valuations: b,
        actions: [x[0], x[1]],
        relative_gap,
        behavior: if relative_gap < params.parity_band { Behavior::Parity } else { Behavior::BestResponse },
    })
}

pub fn asymmetry_sweep(params: &SweepParams) -> Result<SweepResult> {
    if params.steps < 2 || !(params.delta_max > params.delta_min) || params.delta_min < 0.0 {
        return Err(ScenarioError::InvalidArgument(format!(
            "sweep needs 0 <= delta_min < delta_max and >= 2 steps, got [{}, {}] x {}",
            params.delta_min, params.delta_max, params.steps
        )));
    }
    if params.delta_max / 2.0 >= params.mean_valuation {
        return Err(ScenarioError::InvalidArgument("valuations must stay positive across the sweep".into()));
    }
    let deltas: Vec<f64> = (0..params.steps)
        .map(|k| params.delta_min + (params.delta_max - params.delta_min) * k as f64 / (params.steps - 1) as f64)
        .collect();
    let points: Vec<SweepPoint> = if params.parallel {
        deltas.par_iter().map(|&d| sweep_point(params, d)).collect::<Result<_>>()?
    } else {
        deltas.iter().map(|&d| sweep_point(params, d)).collect::<Result<_>>()?
    };
    let switches = points.windows(2).filter(|w| w[0].behavior != w[1].behavior).count();
    let transition = points.iter().find(|p| p.behavior == Behavior::BestResponse).map(|p| p.delta_b);

    let mut spec = ScenarioSpec::new(
        "asymmetry-sweep",
        "synthetic pairs with valuations mean ± Δb/2, labeled by the pre-endgame action gap",
    );
    spec.parameters = serde_json::to_value(params)?;
    let results = vec![
        CheckpointResult::holds("Δb = 0 is parity", points.first().is_some_and(|p| p.behavior == Behavior::Parity)),
        CheckpointResult::holds("labels switch at most once, parity first", switches <= 1 && points[0].behavior == Behavior::Parity),
    ];
    let mut table = format!("# scenario: {}\ndelta_b,b1,b2,x1,x2,relative_gap,behavior\n", serde_json::to_string(&spec)?);
    for p in &points {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.delta_b,
            p.valuations[0],
            p.valuations[1],
            p.actions[0],
            p.actions[1],
            p.relative_gap,
            match p.behavior {
                Behavior::Parity => "parity",
                Behavior::BestResponse => "best-response",
            }
        ));
    }
    let mut summary = vec![format!(
        "asymmetry-sweep: transition at Δb = {}, {switches} switch(es)",
        transition.map_or("none".to_string(), |t| t.to_string())
    )];
    summary.extend(results.iter().map(|r| r.to_string()));
    let report = ScenarioReport {
        spec,
        logs: Vec::new(),
        extraction: None,
        results,
        summary,
        files: vec![OutputFile { name: "asymmetry-sweep.csv".into(), contents: table }],
    };
    Ok(SweepResult { points, transition, switches, report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub game: GameSpec,
    pub resolution: usize,
    pub range: (f64, f64),
    /// Action pairs marked as trial endpoints.
    pub trials: Vec<[f64; 2]>,
    pub bid_floor: f64,
}

impl Default for ParetoParams {
    fn default() -> Self {
        ParetoParams {
            game: GameSpec::kelly_unit(vec![2.0, 2.0]).expect("valid game"),
            resolution: 400,
            range: (0.1, 1.0),
            trials: vec![[0.5, 0.5], [0.1, 0.2], [0.1, 0.1]],
            bid_floor: 1e-3,
        }
    }
}

pub struct ParetoFigure {
    pub sample: ParetoSample,
    pub report: ScenarioReport,
}

pub fn pareto_figure(params: &ParetoParams) -> Result<ParetoFigure> {
    let config = SolverConfig { bid_floor: params.bid_floor, ..SolverConfig::default() };
    let mut sample = pareto::pareto_sample(&params.game, params.resolution, params.range, &config)?;
    for (k, actions) in params.trials.iter().enumerate() {
        let p = pareto::evaluate(&params.game, *actions)?;
        sample.references.push(ReferencePoint { label: format!("trial_{}", k + 1), actions: p.actions, payoffs: p.payoffs });
    }
    let mut spec = ScenarioSpec::new("pareto-figure", "feasible payoff cloud, Pareto front and reference points");
    spec.parameters = serde_json::to_value(params)?;

    let nash = sample.reference("nash").expect("nash reference").payoffs;
    let nash_dominated = sample.grid.iter().any(|g| pareto::dominates(g.payoffs, nash));
    let violations = pareto::audit_front(&sample);
    let results = vec![
        CheckpointResult::holds("Nash payoff point is dominated by a grid point", nash_dominated),
        CheckpointResult::check("front violations in brute-force audit", Expect::AtMost(0.0), violations as f64, None),
        CheckpointResult::holds(
            "front is sorted by the first payoff",
            sample.front.windows(2).all(|w| w[0].payoffs[0] <= w[1].payoffs[0]),
        ),
    ];
    let header = format!("# scenario: {}\n", serde_json::to_string(&spec)?);
    let mut grid = header.clone() + "x1,x2,payoff1,payoff2\n";
    for p in &sample.grid {
        grid.push_str(&format!("{},{},{},{}\n", p.actions[0], p.actions[1], p.payoffs[0], p.payoffs[1]));
    }
    let mut front = header.clone() + "x1,x2,payoff1,payoff2\n";
    for p in &sample.front {
        front.push_str(&format!("{},{},{},{}\n", p.actions[0], p.actions[1], p.payoffs[0], p.payoffs[1]));
    }
    let mut refs = header + "label,x1,x2,payoff1,payoff2\n";
    for r in &sample.references {
        refs.push_str(&format!("{},{},{},{},{}\n", r.label, r.actions[0], r.actions[1], r.payoffs[0], r.payoffs[1]));
    }
    let mut summary = vec![format!(
        "pareto-figure: {} grid points, {} on the front, Nash payoffs {:?}",
        sample.grid.len(),
        sample.front.len(),
        nash
    )];
    summary.extend(results.iter().map(|r| r.to_string()));
    let report = ScenarioReport {
        spec,
        logs: Vec::new(),
        extraction: None,
        results,
        summary,
        files: vec![
            OutputFile { name: "pareto-grid.csv".into(), contents: grid },
            OutputFile { name: "pareto-front.csv".into(), contents: front },
            OutputFile { name: "pareto-references.csv".into(), contents: refs },
        ],
    };
    Ok(ParetoFigure { sample, report })
}
