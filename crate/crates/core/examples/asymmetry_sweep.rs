//! Sweeps valuation asymmetry and reports where synthetic pairs stop holding
//! parity, for several cost-of-parity tolerances.
//!
//! `cargo run --example asymmetry_sweep -- 0.1 0.25 0.5`

use market_trust::agents::Tolerance;
use market_trust::scenarios::{asymmetry_sweep, Behavior, SweepParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fractions: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let fractions = if fractions.is_empty() { vec![0.1, 0.25, 0.5, 1.0] } else { fractions };
    for f in fractions {
        let params = SweepParams { omega_max: Tolerance::NashFraction(f), parallel: true, ..SweepParams::default() };
        let sweep = asymmetry_sweep(&params)?;
        let labels: String = sweep
            .points
            .iter()
            .map(|p| if p.behavior == Behavior::Parity { '=' } else { '>' })
            .collect();
        println!(
            "Ω_max = {f:>5} × Nash payoff: transition {:>6} switches {} {labels}",
            sweep.transition.map_or("none".into(), |t| t.to_string()),
            sweep.switches
        );
    }
    Ok(())
}
