//! Opponent models: the scripted heuristic, the network argmax agent and a
//! constant agent, all deterministic functions of the state.

mod filter;
mod heuristic;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{fmix64, state_hash, Action, AgentId, GameState, NUM_ACTIONS};
use crate::model::Network;

pub use filter::safe_actions;
pub use heuristic::{simple_act, simple_act_with};

/// Non-empty subset of the six actions.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const ALL: ActionSet = ActionSet(0b11_1111);

    pub fn only(a: Action) -> Self {
        Self(1 << a.index())
    }

    pub fn contains(self, a: Action) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn insert(&mut self, a: Action) {
        self.0 |= 1 << a.index();
    }

    pub fn remove(&mut self, a: Action) {
        self.0 &= !(1 << a.index());
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |&a| self.contains(a))
    }

    pub fn mask(self) -> [bool; NUM_ACTIONS] {
        Action::ALL.map(|a| self.contains(a))
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut s = ActionSet::EMPTY;
        for a in iter {
            s.insert(a);
        }
        s
    }
}

/// Filtered argmax of the network policy; lowest index wins ties.
pub fn policy_argmax_act(net: &Network, state: &GameState, agent: AgentId) -> Action {
    if !state.agents[agent].alive {
        return Action::Idle;
    }
    let out = net.forward(&crate::engine::encode_observation(state, agent));
    let allowed = safe_actions(state, agent);
    let mut best = None::<(Action, f32)>;
    for a in allowed.iter() {
        let p = out.p[a.index()];
        if best.map_or(true, |(_, bp)| p > bp) {
            best = Some((a, p));
        }
    }
    best.map_or(Action::Idle, |(a, _)| a)
}

const SEED_SALT: [u64; 3] = [0x243f_6a88_85a3_08d3, 0x1319_8a2e_0370_7344, 0xa409_3822_299f_31d0];

/// Mixes the search seed, the state hash and the agent id into the seed of
/// the heuristic's generator inside a search. Each input goes through a
/// splitmix64 finaliser before the next one is folded in.
pub fn derive_model_seed(search_seed: u64, state_hash: u64, agent: AgentId) -> u64 {
    let mut h = fmix64(search_seed ^ SEED_SALT[0]);
    h = fmix64(h.wrapping_add(state_hash) ^ SEED_SALT[1]);
    fmix64(h.wrapping_add(agent as u64) ^ SEED_SALT[2])
}

/// A deterministic opponent as used inside the search and by the match
/// runner.
#[derive(Clone)]
pub enum OpponentModel {
    /// Heuristic agent whose random draws are seeded from the state.
    SimpleHeuristic { seed: u64 },
    PolicyArgmax(Arc<Network>),
    FixedAction(Action),
}

impl fmt::Debug for OpponentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpponentModel::SimpleHeuristic { seed } => write!(f, "SimpleHeuristic({seed})"),
            OpponentModel::PolicyArgmax(_) => write!(f, "PolicyArgmax"),
            OpponentModel::FixedAction(a) => write!(f, "FixedAction({a})"),
        }
    }
}

impl OpponentModel {
    pub fn act(&self, state: &GameState, agent: AgentId) -> Action {
        if !state.agents[agent].alive {
            return Action::Idle;
        }
        match self {
            OpponentModel::SimpleHeuristic { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_model_seed(*seed, state_hash(state), agent));
                simple_act(state, agent, &mut rng)
            }
            OpponentModel::PolicyArgmax(net) => policy_argmax_act(net, state, agent),
            OpponentModel::FixedAction(a) => *a,
        }
    }
}
