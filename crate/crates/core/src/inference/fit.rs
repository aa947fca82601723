//! Fitting dynamics constants by teacher-forced replay.
//!
//! For each candidate, a fresh synthetic agent is placed in every fitted roster
//! slot and asked for its action each round, given the logged history up to that
//! round. The score is the summed squared gap to the logged actions; rounds whose
//! action was forced by a perturbation are skipped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{InferenceError, Result};
use crate::agents::{Agent, AgentSpec, DynamicsConstants, SyntheticAgent, Tolerance};
use crate::engine::{build_observation, TrajectoryLog};
use crate::solvers::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SearchMethod {
    /// Every combination.
    Grid,
    /// Cyclic one-dimensional sweeps from the middle of each axis until no
    /// sweep improves the score.
    Coordinate { max_sweeps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub omega_max: Vec<Tolerance>,
    pub method: SearchMethod,
    /// Roster slots to fit; `None` selects synthetic slots, or every slot when
    /// the roster has none.
    pub agents: Option<Vec<usize>>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lambda: vec![0.5, 1.0, 2.0, 4.0],
            rho: vec![0.5, 0.7, 0.9],
            alpha: vec![0.25, 0.5, 1.0],
            epsilon: vec![0.01, 0.05, 0.2],
            omega_max: [0.1, 0.25, 0.5, 1.0].map(Tolerance::NashFraction).to_vec(),
            method: SearchMethod::Grid,
            agents: None,
        }
    }
}

const NAMES: [&str; 5] = ["lambda", "rho", "alpha", "epsilon", "omega_max"];

impl SearchSpace {
    fn sizes(&self) -> [usize; 5] {
        [self.lambda.len(), self.rho.len(), self.alpha.len(), self.epsilon.len(), self.omega_max.len()]
    }

    fn axis_value(&self, dim: usize, k: usize) -> f64 {
        match dim {
            0 => self.lambda[k],
            1 => self.rho[k],
            2 => self.alpha[k],
            3 => self.epsilon[k],
            _ => self.omega_max[k].value(),
        }
    }

    fn constants(&self, idx: [usize; 5]) -> DynamicsConstants {
        DynamicsConstants {
            lambda: self.lambda[idx[0]],
            rho: self.rho[idx[1]],
            alpha: self.alpha[idx[2]],
            epsilon: self.epsilon[idx[3]],
            omega_max: self.omega_max[idx[4]],
            ..DynamicsConstants::default()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, size) in NAMES.iter().zip(self.sizes()) {
            if size == 0 {
                return Err(InferenceError::InvalidArgument(format!("empty search space: no values for {name}")));
            }
        }
        for dim in 0..5 {
            for k in 0..self.sizes()[dim] {
                let mut idx = [0; 5];
                idx[dim] = k;
                if let Err(e) = self.constants(idx).validate() {
                    return Err(InferenceError::InvalidArgument(e.to_string()));
                }
            }
        }
        if let SearchMethod::Coordinate { max_sweeps: 0 } = self.method {
            return Err(InferenceError::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// How the replay error responds to one constant with the others at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionDiagnostic {
    pub name: String,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// The error does not change along this axis: the logs carry no
    /// information about the constant.
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub constants: DynamicsConstants,
    pub replay_error: f64,
    pub evaluations: usize,
    /// `(log index, agent)` pairs that were replayed.
    pub fitted: Vec<(usize, usize)>,
    pub diagnostics: Vec<DimensionDiagnostic>,
}

impl FitResult {
    pub fn flat_dimensions(&self) -> Vec<&str> {
        self.diagnostics.iter().filter(|d| d.flat).map(|d| d.name.as_str()).collect()
    }
}

struct Target<'a> {
    log: &'a TrajectoryLog,
    agent: usize,
    coop_action: Option<f64>,
    solver: SolverConfig,
}

fn targets<'a>(logs: &'a [TrajectoryLog], chosen: Option<&[usize]>) -> Result<Vec<(usize, Target<'a>)>> {
    let mut out = Vec::new();
    for (k, log) in logs.iter().enumerate() {
        let roster = &log.config.agents;
        let n = log.config.game.n_agents();
        let slots: Vec<usize> = match chosen {
            Some(list) => list.to_vec(),
            None => {
                let synthetic: Vec<usize> =
                    (0..roster.len()).filter(|&i| matches!(roster[i], AgentSpec::Synthetic { .. })).collect();
                if synthetic.is_empty() {
                    (0..n).collect()
                } else {
                    synthetic
                }
            }
        };
        for agent in slots {
            if agent >= n {
                return Err(InferenceError::InvalidArgument(format!("log {k} has no agent {agent}")));
            }
            let (coop_action, solver) = match roster.get(agent) {
                Some(AgentSpec::Synthetic { coop_action, solver, .. }) => (*coop_action, solver.clone()),
                _ => (None, SolverConfig::default()),
            };
            out.push((k, Target { log, agent, coop_action, solver }));
        }
    }
    Ok(out)
}

/// Summed squared difference between replayed and logged actions.
pub fn replay_error(logs: &[TrajectoryLog], agents: Option<&[usize]>, constants: &DynamicsConstants) -> Result<f64> {
    score(&targets(logs, agents)?, constants)
}

fn score(targets: &[(usize, Target<'_>)], constants: &DynamicsConstants) -> Result<f64> {
    let mut total = 0.0;
    for (_, t) in targets {
        let mut agent = SyntheticAgent::new(*constants, t.coop_action, Vec::new(), t.solver.clone());
        let game = t.log.config.private_game(t.agent);
        for record in &t.log.rounds {
            let obs = build_observation(t.log, t.agent, record.round)?;
            let decision = agent.act(&game, &obs).map_err(|e| InferenceError::InvalidArgument(e.to_string()))?;
            if !record.perturbed[t.agent] {
                total += (decision.action - record.actions[t.agent]).powi(2);
            }
        }
    }
    Ok(total)
}

/// Searches `space` for the constants whose replay best matches `logs`.
pub fn fit_dynamics(logs: &[TrajectoryLog], space: &SearchSpace) -> Result<FitResult> {
    if logs.is_empty() {
        return Err(InferenceError::InvalidArgument("no logs to fit".into()));
    }
    space.validate()?;
    let targets = targets(logs, space.agents.as_deref())?;
    if targets.is_empty() {
        return Err(InferenceError::InvalidArgument("no agents selected for fitting".into()));
    }
    let sizes = space.sizes();
    let eval = |idx: [usize; 5]| score(&targets, &space.constants(idx));

    let (best, best_error, evaluations) = match space.method {
        SearchMethod::Grid => {
            let total: usize = sizes.iter().product();
            let scored = (0..total)
                .into_par_iter()
                .map(|flat| {
                    let idx = decode(flat, sizes);
                    eval(idx).map(|e| (e, flat))
                })
                .collect::<Result<Vec<_>>>()?;
            let (err, flat) = scored
                .into_iter()
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("non-empty grid");
            (decode(flat, sizes), err, total)
        }
        SearchMethod::Coordinate { max_sweeps } => {
            let mut idx = sizes.map(|s| s / 2);
            let mut err = eval(idx)?;
            let mut evaluations = 1;
            for _ in 0..max_sweeps {
                let mut improved = false;
                for dim in 0..5 {
                    for k in 0..sizes[dim] {
                        if k == idx[dim] {
                            continue;
                        }
                        let mut trial = idx;
                        trial[dim] = k;
                        let e = eval(trial)?;
                        evaluations += 1;
                        if e < err {
                            err = e;
                            idx = trial;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            (idx, err, evaluations)
        }
    };

    let mut diagnostics = Vec::with_capacity(5);
    for dim in 0..5 {
        let mut errors = Vec::with_capacity(sizes[dim]);
        for k in 0..sizes[dim] {
            let mut trial = best;
            trial[dim] = k;
            errors.push(eval(trial)?);
        }
        let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        diagnostics.push(DimensionDiagnostic {
            name: NAMES[dim].into(),
            values: (0..sizes[dim]).map(|k| space.axis_value(dim, k)).collect(),
            flat: hi - lo <= 1e-12 * (1.0 + lo.abs()),
            errors,
        });
    }

    Ok(FitResult {
        constants: space.constants(best),
        replay_error: best_error,
        evaluations,
        fitted: targets.iter().map(|(k, t)| (*k, t.agent)).collect(),
        diagnostics,
    })
}

fn decode(mut flat: usize, sizes: [usize; 5]) -> [usize; 5] {
    let mut idx = [0; 5];
    for d in (0..5).rev() {
        idx[d] = flat % sizes[d];
        flat /= sizes[d];
    }
    idx
}
