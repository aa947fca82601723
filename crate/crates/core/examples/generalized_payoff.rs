//! How trust and stability weights move an agent's response away from the
//! selfish best response in symmetric Cournot with b = 15.

use market_trust::game::{self, ActionProfile, GameSpec};
use market_trust::solvers::{self, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GameSpec::cournot(vec![15.0, 15.0])?;
    let config = SolverConfig::default();
    println!("opponent  theta  gamma  response  G_i at response");
    for opponent in [5.0, 3.75, 5.625, 2.5] {
        for (theta, gamma) in [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 1.0)] {
            let x = solvers::generalized_best_response(&spec, 0, &[opponent], theta, gamma, &config)?;
            let g = game::generalized_payoff(&spec, &ActionProfile::new(vec![x, opponent]), 0, theta, gamma)?;
            println!("{opponent:>8}  {theta:>5}  {gamma:>5}  {x:>8.4}  {g:>10.4}");
        }
    }
    Ok(())
}
