//! Samples the Kelly payoff cloud for V = (2, 2) and prints the Pareto front
//! together with the Nash, social-optimum and trial reference points.

use market_trust::scenarios::{pareto_figure, ParetoParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let resolution = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(400);
    let fig = pareto_figure(&ParetoParams { resolution, ..ParetoParams::default() })?;
    for r in &fig.sample.references {
        println!("{:<15} actions {:?} payoffs ({:.4}, {:.4})", r.label, r.actions, r.payoffs[0], r.payoffs[1]);
    }
    let stride = (fig.sample.front.len() / 12).max(1);
    println!("front ({} points, every {stride}th shown):", fig.sample.front.len());
    for p in fig.sample.front.iter().step_by(stride) {
        println!("  ({:.4}, {:.4}) at {:?}", p.payoffs[0], p.payoffs[1], p.actions);
    }
    for line in &fig.report.summary {
        println!("{line}");
    }
    Ok(())
}
