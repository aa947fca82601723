use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::observation::{Observation, PrivateGame};
use super::{mirrored_nash_action, modeled_agents, Agent, AgentError, Decision};
use crate::game::GameKind;
use crate::solvers;

/// Best response to the opponents' latest actions, optionally perturbed by
/// Gaussian noise. Plays the mirrored Nash action in round 1.
#[derive(Debug, Clone)]
pub struct MyopicAgent {
    noise: f64,
    rng: ChaCha8Rng,
}

impl MyopicAgent {
    pub fn new(noise: f64, seed: u64) -> Self {
        MyopicAgent { noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn exact() -> Self {
        Self::new(0.0, 0)
    }

    /// Noise-free action for `observation`.
    pub fn best_action(game: &PrivateGame, obs: &Observation) -> Result<f64, AgentError> {
        let Some(last) = obs.last() else {
            return Ok(mirrored_nash_action(game, modeled_agents(game)));
        };
        let opponents = last.opponents(obs.agent_index);
        let others = last.others_total(obs.agent_index);
        if game.kind == GameKind::Kelly && others <= 0.0 {
            return Ok(game.bid_floor);
        }
        let spec = game.mirrored(opponents.len() + 1)?;
        let x = solvers::best_response(&spec, 0, others)?;
        Ok(match game.kind {
            GameKind::Kelly => x.max(game.bid_floor),
            GameKind::Cournot => x,
        })
    }
}

impl Agent for MyopicAgent {
    fn act(&mut self, game: &PrivateGame, obs: &Observation) -> Result<Decision, AgentError> {
        let mut x = Self::best_action(game, obs)?;
        if self.noise > 0.0 {
            let normal = Normal::new(0.0, self.noise).map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
            x = (x + normal.sample(&mut self.rng)).max(0.0);
        }
        Ok(Decision::plain(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::observation::{MarketView, Observability, ObservedRound};

    fn game() -> PrivateGame {
        PrivateGame { kind: GameKind::Cournot, own_value: 15.0, capacity: None, bid_floor: 1e-3, n_agents: Some(2) }
    }

    fn after(opponent: f64) -> Observation {
        Observation {
            round: 2,
            horizon: 10,
            agent_index: 1,
            observability: Observability::OpenInfo,
            history: vec![ObservedRound {
                round: 1,
                own_action: 5.0,
                own_payoff: 0.0,
                price: 5.0 + opponent,
                market: MarketView::OpenInfo { actions: vec![opponent, 5.0] },
            }],
        }
    }

    #[test]
    fn best_responds() {
        let mut a = MyopicAgent::exact();
        assert_eq!(a.act(&game(), &after(5.0)).unwrap().action, 5.0);
        assert_eq!(a.act(&game(), &after(3.75)).unwrap().action, 5.625);
        let first = Observation { round: 1, history: vec![], ..after(0.0) };
        assert_eq!(a.act(&game(), &first).unwrap().action, 5.0);
    }

    #[test]
    fn noise_is_seeded() {
        let run = |seed| {
            let mut a = MyopicAgent::new(0.3, seed);
            (0..5).map(|_| a.act(&game(), &after(5.0)).unwrap().action).collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }
}
