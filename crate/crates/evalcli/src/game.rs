//! Seats, networks and the single-game loop.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use bomberplan_core::engine::replay::Replay;
use bomberplan_core::engine::{
    agent_result, generate_board, step, Action, AgentId, AgentOutcome, GameState, ObservationPlanes, Position,
    NUM_ACTIONS, NUM_AGENTS,
};
use bomberplan_core::model::{init_random, read_weights, Evaluator, ModelOutput, Network};
use bomberplan_core::opponents::OpponentModel;
use bomberplan_core::search::{search_root, BomberEnv, SearchConfig, SearchResult, Searcher};

use crate::config::{MatchConfig, ModelSpec, NamedSeat, SeatSpec, WeightsSpec};
use crate::Error;

/// Network or uniform evaluator shared by every game of a run.
#[derive(Clone, Debug)]
pub enum NetEval {
    Net(Arc<Network>),
    Uniform,
}

impl Evaluator<ObservationPlanes> for NetEval {
    fn evaluate(&self, obs: &ObservationPlanes) -> ModelOutput {
        match self {
            NetEval::Net(n) => n.forward(obs),
            NetEval::Uniform => ModelOutput::uniform(),
        }
    }
}

impl NetEval {
    pub fn load(spec: &WeightsSpec) -> Result<Self, Error> {
        Ok(match spec {
            WeightsSpec::Uniform => NetEval::Uniform,
            WeightsSpec::Random(seed) => NetEval::Net(Arc::new(Network::new(&init_random(*seed))?)),
            WeightsSpec::File(p) => NetEval::Net(Arc::new(Network::new(&read_weights(p)?)?)),
        })
    }

    /// Policy-argmax agent on this evaluator; the uniform evaluator idles.
    fn argmax_model(&self) -> OpponentModel {
        match self {
            NetEval::Net(n) => OpponentModel::PolicyArgmax(n.clone()),
            NetEval::Uniform => OpponentModel::FixedAction(Action::Idle),
        }
    }
}

/// Networks of every seat, loaded once per run.
#[derive(Clone, Debug, Default)]
pub struct Networks(HashMap<String, NetEval>);

impl Networks {
    pub fn load(seats: &[SeatSpec]) -> Result<Self, Error> {
        let mut map = HashMap::new();
        for w in seats.iter().filter_map(SeatSpec::weights) {
            let key = String::from(w.clone());
            if !map.contains_key(&key) {
                map.insert(key, NetEval::load(w)?);
            }
        }
        Ok(Self(map))
    }

    fn get(&self, w: &WeightsSpec) -> &NetEval {
        &self.0[&String::from(w.clone())]
    }
}

/// Search statistics of one move.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub depth_max: u32,
    pub time_ms: f64,
}

pub enum Agent {
    Model(OpponentModel),
    Search {
        searcher: Box<Searcher<GameState>>,
        eval: NetEval,
        models: Vec<OpponentModel>,
        true_state: bool,
    },
}

impl Agent {
    /// Builds the agent for `seat`; `seed` decorrelates its random draws
    /// from other games and seats.
    pub fn new(seat: &SeatSpec, nets: &Networks, seed: u64) -> Self {
        match seat {
            SeatSpec::Named(NamedSeat::Simple) => Agent::Model(OpponentModel::SimpleHeuristic { seed }),
            SeatSpec::Named(NamedSeat::Fixed(a)) => Agent::Model(OpponentModel::FixedAction(*a)),
            SeatSpec::Named(NamedSeat::RawNet(w)) => Agent::Model(nets.get(w).argmax_model()),
            SeatSpec::Search(s) => {
                let eval = nets.get(&s.weights).clone();
                let models = s
                    .search
                    .opponent_model
                    .iter()
                    .enumerate()
                    .map(|(i, m)| match m {
                        ModelSpec::Simple => OpponentModel::SimpleHeuristic {
                            seed: s.search.seed ^ seed.rotate_left(i as u32 * 16),
                        },
                        ModelSpec::RawNet => eval.argmax_model(),
                        ModelSpec::Fixed(a) => OpponentModel::FixedAction(*a),
                    })
                    .collect();
                let cfg = SearchConfig {
                    search_seed: s.search.seed ^ seed,
                    ..s.search.to_config(s.mode.search_mode())
                };
                Agent::Search {
                    searcher: Box::new(Searcher::new(cfg)),
                    eval,
                    models,
                    true_state: s.search.true_state,
                }
            }
        }
    }

    pub fn act(&mut self, state: &GameState, agent: AgentId) -> (Action, Option<SearchResult>) {
        match self {
            Agent::Model(m) => (m.act(state, agent), None),
            Agent::Search {
                searcher,
                eval,
                models,
                true_state,
            } => {
                let root = search_root(state, *true_state);
                let r = searcher
                    .search(&BomberEnv, eval, models, &root, agent)
                    .expect("live agents in running games are searchable");
                (r.chosen_action, Some(r))
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

impl Outcome {
    /// Timeouts and step-limit cut-offs count as ties for survivors.
    pub fn of(state: &GameState, agent: AgentId) -> Outcome {
        match agent_result(state, agent) {
            AgentOutcome::Win => Outcome::Win,
            AgentOutcome::Loss => Outcome::Loss,
            AgentOutcome::Draw => Outcome::Tie,
            AgentOutcome::Ongoing => Outcome::Tie,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Win => "win",
            Outcome::Tie => "tie",
            Outcome::Loss => "loss",
        }
    }
}

/// Everything the reports need from one game, indexed by agent id.
#[derive(Clone, Debug, PartialEq)]
pub struct GameRecord {
    pub game: u32,
    pub seed: u64,
    pub board_seed: u64,
    /// Seat index playing each agent id.
    pub seat_of: [usize; NUM_AGENTS],
    pub outcome: [Outcome; NUM_AGENTS],
    pub steps: u16,
    pub actions: Vec<[Action; NUM_AGENTS]>,
    /// Position at every decision the agent made while alive.
    pub trajectory: [Vec<Position>; NUM_AGENTS],
    pub chosen: [[u64; NUM_ACTIONS]; NUM_AGENTS],
    pub search: [Vec<MoveStats>; NUM_AGENTS],
    pub final_state: GameState,
}

impl GameRecord {
    pub fn agent_of(&self, seat: usize) -> AgentId {
        self.seat_of.iter().position(|&s| s == seat).expect("every seat plays")
    }

    pub fn replay(&self) -> Replay {
        Replay {
            seed: self.board_seed,
            actions: self.actions.clone(),
        }
    }
}

/// One decision of a live agent, seen before the joint step.
pub struct Decision<'a> {
    pub state: &'a GameState,
    pub agent: AgentId,
    pub seat: usize,
    pub action: Action,
    pub search: Option<&'a SearchResult>,
}

/// Seed of board, seat order and agents for game `game` of a run.
pub fn game_seed(base: u64, game: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(game as u64 + 1);
    rng.next_u64()
}

pub fn play_game(cfg: &MatchConfig, nets: &Networks, game: u32) -> GameRecord {
    play_game_with(cfg, nets, game, |_| {})
}

/// Plays game `game` of a run, calling `hook` on every decision.
pub fn play_game_with(
    cfg: &MatchConfig,
    nets: &Networks,
    game: u32,
    mut hook: impl FnMut(Decision<'_>),
) -> GameRecord {
    let seed = game_seed(cfg.seed, game);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seat_of = [0, 1, 2, 3];
    if cfg.randomize_seats {
        seat_of.shuffle(&mut rng);
    }
    let mut agents: Vec<Agent> = (0..NUM_AGENTS)
        .map(|id| Agent::new(&cfg.seats[seat_of[id]], nets, rng.next_u64()))
        .collect();
    let board_seed = rng.next_u64();
    let mut state = generate_board(board_seed);
    let mut rec = GameRecord {
        game,
        seed,
        board_seed,
        seat_of,
        outcome: [Outcome::Tie; NUM_AGENTS],
        steps: 0,
        actions: Vec::new(),
        trajectory: Default::default(),
        chosen: [[0; NUM_ACTIONS]; NUM_AGENTS],
        search: Default::default(),
        final_state: state.clone(),
    };
    while !state.is_terminal() && state.step_count < cfg.step_limit {
        let mut joint = [Action::Idle; NUM_AGENTS];
        for id in 0..NUM_AGENTS {
            if !state.agents[id].alive {
                continue;
            }
            let t = Instant::now();
            let (a, r) = agents[id].act(&state, id);
            let ms = t.elapsed().as_secs_f64() * 1e3;
            joint[id] = a;
            rec.trajectory[id].push(state.agents[id].pos);
            rec.chosen[id][a.index()] += 1;
            hook(Decision {
                state: &state,
                agent: id,
                seat: seat_of[id],
                action: a,
                search: r.as_ref(),
            });
            if let Some(r) = r {
                rec.search[id].push(MoveStats {
                    depth_max: r.depth_max,
                    time_ms: ms,
                });
            }
        }
        state = step(&state, &joint).expect("running game");
        rec.actions.push(joint);
    }
    rec.steps = state.step_count;
    rec.outcome = std::array::from_fn(|id| Outcome::of(&state, id));
    rec.final_state = state;
    rec
}
