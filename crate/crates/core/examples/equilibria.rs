//! Nash equilibrium, social optimum and efficiency loss for both market games.

use market_trust::game::{self, GameSpec};
use market_trust::solvers::{self, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SolverConfig::default();
    let games = [
        ("Cournot b = (15, 15)", GameSpec::cournot(vec![15.0, 15.0])?),
        ("Cournot b = (15, 12, 9)", GameSpec::cournot(vec![15.0, 12.0, 9.0])?),
        ("Kelly V = (2, 2), C = 1", GameSpec::kelly_unit(vec![2.0, 2.0])?),
        ("Kelly V = (3, 2, 1), C = 2", GameSpec::kelly(2.0, vec![3.0, 2.0, 1.0])?),
    ];
    for (label, spec) in games {
        let nash = solvers::nash_equilibrium(&spec, &config)?;
        let iterated = solvers::nash_by_iteration(&spec, &config)?;
        let opt = solvers::social_optimum(&spec, &config)?;
        let (wn, wo) = (game::welfare(&spec, &nash)?, game::welfare(&spec, &opt)?);
        println!("{label}");
        println!("  Nash            {:?} (iteration {:?})", nash.actions(), iterated.actions());
        println!("  social optimum  {:?}", opt.actions());
        println!("  welfare {wn:.4} -> {wo:.4}, efficiency loss {:.2}%", 100.0 * (wo - wn) / wo);
    }
    Ok(())
}
