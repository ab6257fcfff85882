use crate::engine::{
    agent_result, encode_observation, state_hash, step, Action, AgentId, AgentOutcome, GameState,
    ObservationPlanes, Position, NUM_ACTIONS, NUM_AGENTS,
};
use crate::opponents::OpponentModel;

/// A deterministic simultaneous-move game the search can plan in.
pub trait SimulationEnvironment {
    type State: Clone;
    /// Model input.
    type Obs;

    fn num_agents(&self) -> usize;

    fn is_alive(&self, state: &Self::State, agent: AgentId) -> bool;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// `joint` holds one action per agent; entries of dead agents are
    /// ignored. Never called on terminal states.
    fn step(&self, state: &Self::State, joint: &[Action]) -> Self::State;

    fn outcome(&self, state: &Self::State, agent: AgentId) -> AgentOutcome;

    /// Exact value of a decided outcome for `agent`, `None` while it is
    /// still open. Games with graded payoffs override this.
    fn terminal_value(&self, state: &Self::State, agent: AgentId) -> Option<f32> {
        self.outcome(state, agent).value()
    }

    fn observe(&self, state: &Self::State, agent: AgentId) -> Self::Obs;

    fn position(&self, state: &Self::State, agent: AgentId) -> Position;

    fn hash(&self, state: &Self::State) -> u64;

    /// Actions the search may branch on for `agent`.
    fn legal_actions(&self, _state: &Self::State, _agent: AgentId) -> [bool; NUM_ACTIONS] {
        [true; NUM_ACTIONS]
    }

    fn actors(&self, state: &Self::State) -> Vec<AgentId> {
        (0..self.num_agents()).filter(|&i| self.is_alive(state, i)).collect()
    }
}

/// Deterministic policy for a non-branching agent.
pub trait OpponentPolicy<S> {
    fn act(&self, state: &S, agent: AgentId) -> Action;
}

impl OpponentPolicy<GameState> for OpponentModel {
    fn act(&self, state: &GameState, agent: AgentId) -> Action {
        OpponentModel::act(self, state, agent)
    }
}

impl<S, F: Fn(&S, AgentId) -> Action> OpponentPolicy<S> for F {
    fn act(&self, state: &S, agent: AgentId) -> Action {
        self(state, agent)
    }
}

/// The bomber game.
#[derive(Clone, Copy, Debug, Default)]
pub struct BomberEnv;

impl SimulationEnvironment for BomberEnv {
    type State = GameState;
    type Obs = ObservationPlanes;

    fn num_agents(&self) -> usize {
        NUM_AGENTS
    }

    fn is_alive(&self, state: &GameState, agent: AgentId) -> bool {
        state.agents[agent].alive
    }

    fn is_terminal(&self, state: &GameState) -> bool {
        state.is_terminal()
    }

    fn step(&self, state: &GameState, joint: &[Action]) -> GameState {
        let joint: [Action; NUM_AGENTS] = joint.try_into().expect("one action per agent");
        step(state, &joint).expect("search never steps a finished game")
    }

    fn outcome(&self, state: &GameState, agent: AgentId) -> AgentOutcome {
        agent_result(state, agent)
    }

    fn observe(&self, state: &GameState, agent: AgentId) -> ObservationPlanes {
        encode_observation(state, agent)
    }

    fn position(&self, state: &GameState, agent: AgentId) -> Position {
        state.agents[agent].pos
    }

    fn hash(&self, state: &GameState) -> u64 {
        state_hash(state)
    }
}

/// Closest living opponent by Manhattan distance, lowest id on ties.
pub fn select_opponent<Env: SimulationEnvironment>(
    env: &Env,
    state: &Env::State,
    player: AgentId,
) -> Option<AgentId> {
    let me = env.position(state, player);
    (0..env.num_agents())
        .filter(|&i| i != player && env.is_alive(state, i))
        .min_by_key(|&i| (me.manhattan(env.position(state, i)), i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_then_lowest_id() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(5, 5);
        s.agents[1].pos = Position::new(5, 7);
        s.agents[2].pos = Position::new(5, 10);
        s.agents[3].pos = Position::new(3, 5);
        assert_eq!(select_opponent(&BomberEnv, &s, 0), Some(1));
        s.agents[1].pos = Position::new(5, 8);
        s.agents[3].pos = Position::new(8, 5);
        assert_eq!(select_opponent(&BomberEnv, &s, 0), Some(1));
        s.agents[1].alive = false;
        assert_eq!(select_opponent(&BomberEnv, &s, 0), Some(3));
        s.agents[2].alive = false;
        s.agents[3].alive = false;
        assert_eq!(select_opponent(&BomberEnv, &s, 0), None);
    }
}
