//! Feasible payoff cloud and Pareto front of a two-agent game.

use serde::{Deserialize, Serialize};

use crate::game::{self, ActionProfile, GameKind, GameSpec};
use crate::solvers::{self, Result, SolverConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffPoint {
    pub actions: [f64; 2],
    pub payoffs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub label: String,
    pub actions: [f64; 2],
    pub payoffs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSample {
    pub grid: Vec<PayoffPoint>,
    /// Non-dominated grid points, sorted by the first payoff coordinate.
    pub front: Vec<PayoffPoint>,
    pub references: Vec<ReferencePoint>,
}

impl ParetoSample {
    pub fn reference(&self, label: &str) -> Option<&ReferencePoint> {
        self.references.iter().find(|r| r.label == label)
    }
}

/// `a` weakly dominates `b` in both coordinates and strictly in one.
pub fn dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1])
}

/// Indices of the non-dominated points, in `O(n log n)`.
pub fn non_dominated(points: &[[f64; 2]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b][0].total_cmp(&points[a][0]).then(points[b][1].total_cmp(&points[a][1]))
    });
    let mut front = Vec::new();
    let mut best_second = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let first = points[order[start]][0];
        let mut end = start;
        while end < order.len() && points[order[end]][0] == first {
            end += 1;
        }
        // Sorted descending, so the group's best second coordinate comes first.
        let group_best = points[order[start]][1];
        if group_best > best_second {
            front.extend(order[start..end].iter().copied().filter(|&k| points[k][1] == group_best));
            best_second = group_best;
        }
        start = end;
    }
    front
}

/// Evaluates both payoffs over a `resolution × resolution` action grid spanning
/// `range` in each coordinate and marks the Pareto front.
///
/// The Nash point and the welfare optimum (subject to the bid floor for Kelly)
/// are attached as labeled references.
pub fn pareto_sample(spec: &GameSpec, resolution: usize, range: (f64, f64), config: &SolverConfig) -> Result<ParetoSample> {
    if spec.n_agents() != 2 {
        return Err(SolverError::InvalidArgument(format!("pareto sampling needs 2 agents, got {}", spec.n_agents())));
    }
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) || resolution < 2 {
        return Err(SolverError::InvalidArgument(format!(
            "empty action range [{lo}, {hi}] with resolution {resolution}"
        )));
    }
    if spec.kind() == GameKind::Kelly && lo <= 0.0 {
        return Err(SolverError::InvalidArgument("Kelly payoffs need strictly positive bids".into()));
    }
    let axis: Vec<f64> = (0..resolution)
        .map(|k| if k + 1 == resolution { hi } else { lo + (hi - lo) * k as f64 / (resolution - 1) as f64 })
        .collect();

    let mut grid = Vec::with_capacity(resolution * resolution);
    for &a in &axis {
        for &b in &axis {
            grid.push(evaluate(spec, [a, b])?);
        }
    }
    let payoffs: Vec<[f64; 2]> = grid.iter().map(|p| p.payoffs).collect();
    let mut front: Vec<PayoffPoint> = non_dominated(&payoffs).into_iter().map(|k| grid[k]).collect();
    front.sort_by(|a, b| a.payoffs[0].total_cmp(&b.payoffs[0]).then(a.payoffs[1].total_cmp(&b.payoffs[1])));

    let mut references = Vec::new();
    for (label, profile) in [
        ("nash", solvers::nash_equilibrium(spec, config)?),
        ("social_optimum", solvers::social_optimum(spec, config)?),
    ] {
        let p = evaluate(spec, [profile.actions()[0], profile.actions()[1]])?;
        references.push(ReferencePoint { label: label.into(), actions: p.actions, payoffs: p.payoffs });
    }
    Ok(ParetoSample { grid, front, references })
}

/// Payoff pair at an action pair.
pub fn evaluate(spec: &GameSpec, actions: [f64; 2]) -> Result<PayoffPoint> {
    let profile = ActionProfile::new(actions.to_vec());
    Ok(PayoffPoint {
        actions,
        payoffs: [game::payoff(spec, &profile, 0)?, game::payoff(spec, &profile, 1)?],
    })
}

/// Brute-force count of front points dominated by some grid point.
pub fn audit_front(sample: &ParetoSample) -> usize {
    sample
        .front
        .iter()
        .filter(|f| sample.grid.iter().any(|g| dominates(g.payoffs, f.payoffs)))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_rules() {
        assert!(dominates([1.0, 1.0], [0.5, 1.0]));
        assert!(!dominates([1.0, 1.0], [1.0, 1.0]));
        assert!(!dominates([2.0, 0.0], [1.0, 1.0]));
    }

    #[test]
    fn non_dominated_handles_ties() {
        let pts = [[1.0, 1.0], [1.0, 1.0], [1.0, 0.5], [0.5, 2.0], [0.2, 2.0], [2.0, 0.1]];
        let mut f = non_dominated(&pts);
        f.sort();
        assert_eq!(f, vec![0, 1, 3, 5]);
    }

    #[test]
    fn kelly_front_and_references() {
        let spec = GameSpec::kelly_unit(vec![2.0, 2.0]).unwrap();
        let sample = pareto_sample(&spec, 10, (0.1, 1.0), &SolverConfig::default()).unwrap();
        assert_eq!(sample.grid.len(), 100);
        assert_eq!(audit_front(&sample), 0);
        let nash = sample.reference("nash").unwrap();
        assert!((nash.payoffs[0] - 0.5).abs() < 1e-8);
        assert!(sample.grid.iter().any(|g| dominates(g.payoffs, nash.payoffs)));
        assert!(sample.front.windows(2).all(|w| w[0].payoffs[0] <= w[1].payoffs[0]));
        // (0.1, 0.1) is the lowest grid pair and pays 0.9 each.
        assert!(sample.front.iter().any(|p| (p.payoffs[0] - 0.9).abs() < 1e-12 && (p.payoffs[1] - 0.9).abs() < 1e-12));
    }

    #[test]
    fn symmetric_front_is_mirrored() {
        let spec = GameSpec::cournot(vec![15.0, 15.0]).unwrap();
        let sample = pareto_sample(&spec, 31, (0.0, 7.5), &SolverConfig::default()).unwrap();
        for p in &sample.front {
            assert!(sample.front.iter().any(|q| q.payoffs == [p.payoffs[1], p.payoffs[0]]));
        }
    }

    #[test]
    fn argument_errors() {
        let spec = GameSpec::kelly_unit(vec![2.0, 2.0]).unwrap();
        let c = SolverConfig::default();
        assert!(pareto_sample(&spec, 10, (1.0, 1.0), &c).is_err());
        assert!(pareto_sample(&spec, 10, (0.0, 1.0), &c).is_err());
        assert!(pareto_sample(&spec, 1, (0.1, 1.0), &c).is_err());
        let three = GameSpec::cournot(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(pareto_sample(&three, 10, (0.0, 1.0), &c).is_err());
    }
}
