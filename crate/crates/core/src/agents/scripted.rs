use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::observation::{Observation, PrivateGame};
use super::{Agent, AgentError, Decision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    pub round: usize,
    pub action: f64,
}

/// Plays fixed actions at listed rounds and delegates every other round.
pub struct ScriptedAgent {
    script: BTreeMap<usize, f64>,
    fallback: Option<Box<dyn Agent>>,
}

impl ScriptedAgent {
    pub fn new(steps: &[ScriptStep], fallback: Option<Box<dyn Agent>>) -> Self {
        ScriptedAgent { script: steps.iter().map(|s| (s.round, s.action)).collect(), fallback }
    }

    pub fn scripted_action(&self, round: usize) -> Option<f64> {
        self.script.get(&round).copied()
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, game: &PrivateGame, obs: &Observation) -> Result<Decision, AgentError> {
        // The fallback sees every round so that its own state stays current.
        let delegated = match self.fallback.as_mut() {
            Some(f) => Some(f.act(game, obs)?),
            None => None,
        };
        match (self.scripted_action(obs.round), delegated) {
            (Some(x), _) => Ok(Decision::plain(x)),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(AgentError::Unscripted { round: obs.round }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MarketView, MyopicAgent, Observability, ObservedRound};
    use crate::game::GameKind;

    fn obs(round: usize) -> Observation {
        Observation {
            round,
            horizon: 10,
            agent_index: 1,
            observability: Observability::OpenInfo,
            history: vec![ObservedRound {
                round: round - 1,
                own_action: 3.75,
                own_payoff: 0.0,
                price: 7.5,
                market: MarketView::OpenInfo { actions: vec![3.75, 3.75] },
            }],
        }
    }

    #[test]
    fn scripted_then_delegated() {
        let game = PrivateGame { kind: GameKind::Cournot, own_value: 15.0, capacity: None, bid_floor: 1e-3, n_agents: Some(2) };
        let steps = [ScriptStep { round: 6, action: 5.625 }, ScriptStep { round: 7, action: 2.5 }];
        let mut a = ScriptedAgent::new(&steps, Some(Box::new(MyopicAgent::exact())));
        assert_eq!(a.act(&game, &obs(6)).unwrap().action, 5.625);
        assert_eq!(a.act(&game, &obs(7)).unwrap().action, 2.5);
        assert_eq!(a.act(&game, &obs(8)).unwrap().action, 5.625);
        let mut bare = ScriptedAgent::new(&steps, None);
        assert!(matches!(bare.act(&game, &obs(8)), Err(AgentError::Unscripted { round: 8 })));
    }
}
