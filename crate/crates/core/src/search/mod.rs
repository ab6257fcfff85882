//! PUCT tree search in two flavours.
//!
//! `SinglePlayer`: only the searching agent branches; every other agent acts
//! through its opponent model inside the environment step and values are
//! backed up unchanged.
//!
//! `TwoPlayer`: the searching agent and one selected opponent (the closest
//! living one) branch alternately. A player node records the chosen action
//! without stepping; the following opponent node steps the environment with
//! both actions and the models of everyone else. Values flip sign per ply.

mod env;
mod tree;

#[cfg(test)]
mod tests;

use std::time::{Duration, Instant};

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Dirichlet;
use thiserror::Error;

use crate::engine::{fmix64, Action, AgentId, GameState, NUM_ACTIONS};
use crate::model::{Evaluator, ModelOutput};

pub use env::{select_opponent, BomberEnv, OpponentPolicy, SimulationEnvironment};
pub use tree::{
    backprop_negamax, backprop_sp, get_active_agent, policy_target_sharpen, principal_variation,
    puct_select, NodeId, NodeKind, SearchNode, SearchTree,
};

/// Largest number of agents the evaluation cache is sized for.
pub const MAX_AGENTS: usize = 4;

const PV_MAX_LEN: usize = 64;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SearchMode {
    SinglePlayer,
    TwoPlayer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub simulations: u32,
    pub c_puct: f64,
    pub q_init: f64,
    /// `(epsilon, concentration)` of the Dirichlet noise mixed into the root
    /// priors.
    pub root_noise: Option<(f64, f64)>,
    pub temperature: f64,
    pub search_seed: u64,
    /// Nodes at this depth are treated as leaves.
    pub max_depth: u32,
    pub reuse_tree: bool,
    /// TwoPlayer only: value the player node on the state after stepping
    /// with the player action and every other agent's model.
    pub eval_player_node_post_step: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mode: SearchMode::SinglePlayer,
            simulations: 100,
            c_puct: 2.5,
            q_init: 0.0,
            root_noise: None,
            temperature: 0.0,
            search_seed: 0,
            max_depth: 800,
            reuse_tree: false,
            eval_player_node_post_step: false,
        }
    }
}

pub const DEFAULT_NOISE: (f64, f64) = (0.25, 0.2);

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("root state is terminal for the searching agent")]
    TerminalRoot,
    #[error("simulations must be at least 1")]
    NoSimulations,
    #[error("expected one opponent model per agent ({expected}), got {found}")]
    OpponentCount { expected: usize, found: usize },
    #[error("environment has {0} agents, at most {MAX_AGENTS} supported")]
    TooManyAgents(usize),
    #[error("agent {0} does not exist")]
    BadPlayer(AgentId),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// Wall time spent in the environment, the evaluator and the opponent
/// models during one search.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SearchTiming {
    pub env: Duration,
    pub model: Duration,
    pub opponents: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub pi: [f32; NUM_ACTIONS],
    /// Mean backed-up root value for the searching agent.
    pub root_value: f32,
    pub chosen_action: Action,
    pub node_count: usize,
    /// Deepest leaf reached, in edges from the root.
    pub depth_max: u32,
    pub depth_mean: f64,
    pub elapsed: Duration,
    pub pv: Vec<Action>,
    pub visits: [u32; NUM_ACTIONS],
    pub q: [Option<f32>; NUM_ACTIONS],
    pub timing: SearchTiming,
}

/// One simulation: the traversed edges and the value added to the last one.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRecord {
    pub path: Vec<(NodeId, Action)>,
    pub leaf: NodeId,
    pub value: f64,
}

type EvalCache = [Option<ModelOutput>; MAX_AGENTS];

/// Runs searches and optionally keeps the tree between consecutive moves.
#[derive(Clone, Debug)]
pub struct Searcher<S> {
    config: SearchConfig,
    tree: Option<SearchTree<S>>,
    evals: Vec<EvalCache>,
    log: Option<Vec<SimulationRecord>>,
}

struct Ctx<'a, Env, E: ?Sized, O> {
    env: &'a Env,
    model: &'a E,
    opponents: &'a [O],
    cfg: &'a SearchConfig,
    player: AgentId,
    timing: SearchTiming,
}

/// Search from `root` once with a fresh tree.
pub fn run<Env, E, O>(
    env: &Env,
    model: &E,
    opponents: &[O],
    root: &Env::State,
    player: AgentId,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError>
where
    Env: SimulationEnvironment,
    E: Evaluator<Env::Obs> + ?Sized,
    O: OpponentPolicy<Env::State>,
{
    Searcher::new(config.clone()).search(env, model, opponents, root, player)
}

/// The state the searching agent plans from: the true state, or the state
/// with hidden items removed.
pub fn search_root(state: &GameState, true_state: bool) -> GameState {
    if true_state {
        state.clone()
    } else {
        state.without_hidden_items()
    }
}

impl<S: Clone> Searcher<S> {
    pub fn new(config: SearchConfig) -> Self {
        Self {
            config,
            tree: None,
            evals: Vec::new(),
            log: None,
        }
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    /// Tree of the last search.
    pub fn tree(&self) -> Option<&SearchTree<S>> {
        self.tree.as_ref()
    }

    /// Records every simulation of subsequent searches.
    pub fn record_simulations(&mut self, on: bool) {
        self.log = on.then(Vec::new);
    }

    pub fn simulation_log(&self) -> &[SimulationRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn search<Env, E, O>(
        &mut self,
        env: &Env,
        model: &E,
        opponents: &[O],
        root: &S,
        player: AgentId,
    ) -> Result<SearchResult, SearchError>
    where
        Env: SimulationEnvironment<State = S>,
        E: Evaluator<Env::Obs> + ?Sized,
        O: OpponentPolicy<S>,
    {
        let start = Instant::now();
        let cfg = self.config.clone();
        validate(&cfg)?;
        let agents = env.num_agents();
        if agents > MAX_AGENTS {
            return Err(SearchError::TooManyAgents(agents));
        }
        if player >= agents {
            return Err(SearchError::BadPlayer(player));
        }
        if opponents.len() != agents {
            return Err(SearchError::OpponentCount {
                expected: agents,
                found: opponents.len(),
            });
        }
        if env.is_terminal(root) || env.terminal_value(root, player).is_some() {
            return Err(SearchError::TerminalRoot);
        }
        let mut ctx = Ctx {
            env,
            model,
            opponents,
            cfg: &cfg,
            player,
            timing: SearchTiming::default(),
        };
        let root_hash = env.hash(root);
        let mut rng = ChaCha8Rng::seed_from_u64(fmix64(cfg.search_seed ^ fmix64(root_hash)));

        let reused = if cfg.reuse_tree { self.take_reusable(env, root_hash, player) } else { None };
        let (mut tree, mut evals) = match reused {
            Some(x) => x,
            None => {
                self.tree = None;
                (
                    SearchTree {
                        nodes: Vec::new(),
                        states: vec![root.clone()],
                        player,
                    },
                    vec![[None; MAX_AGENTS]],
                )
            }
        };
        let root_out = evaluate(&mut ctx, &tree.states, &mut evals, 0, player);
        let legal = env.legal_actions(root, player);
        let mut priors = masked_priors(&root_out.p, &legal);
        if let Some((eps, conc)) = cfg.root_noise {
            add_noise(&mut priors, &legal, eps, conc, &mut rng);
        }
        if tree.nodes.is_empty() {
            tree.nodes.push(SearchNode {
                kind: NodeKind::PlayerDecision,
                state: 0,
                active_agent: player,
                pending_player_action: None,
                n: [0; NUM_ACTIONS],
                w: [0.0; NUM_ACTIONS],
                p: priors,
                legal,
                children: [None; NUM_ACTIONS],
                terminal: false,
                value: root_out.v,
                depth: 0,
                parent: None,
            });
        } else {
            tree.nodes[0].p = priors;
        }

        let mut depth_max = 0;
        let mut depth_sum = 0u64;
        if let Some(log) = &mut self.log {
            log.clear();
        }
        for _ in 0..cfg.simulations {
            let rec = simulate(&mut tree, &mut evals, &mut ctx);
            let depth = tree.node(rec.leaf).depth;
            depth_max = depth_max.max(depth);
            depth_sum += depth as u64;
            if let Some(log) = &mut self.log {
                log.push(rec);
            }
        }

        let root_node = tree.root();
        let visits = root_node.n;
        let total: u32 = visits.iter().sum();
        let pi = visits.map(|n| n as f32 / total as f32);
        let w_total: f64 = root_node.w.iter().sum();
        let chosen_action = choose(&visits, cfg.temperature, &mut rng);
        let result = SearchResult {
            pi,
            root_value: (w_total / total as f64) as f32,
            chosen_action,
            node_count: tree.len(),
            depth_max,
            depth_mean: depth_sum as f64 / cfg.simulations as f64,
            elapsed: Duration::ZERO,
            pv: principal_variation(&tree, PV_MAX_LEN),
            visits,
            q: Action::ALL.map(|a| root_node.q(a).map(|q| q as f32)),
            timing: ctx.timing,
        };
        self.tree = Some(tree);
        self.evals = evals;
        Ok(SearchResult {
            elapsed: start.elapsed(),
            ..result
        })
    }

    /// Pulls the subtree whose root matches `root_hash` one environment step
    /// below the previous root.
    fn take_reusable<Env: SimulationEnvironment<State = S>>(
        &mut self,
        env: &Env,
        root_hash: u64,
        player: AgentId,
    ) -> Option<(SearchTree<S>, Vec<EvalCache>)> {
        let old = self.tree.take()?;
        let evals = std::mem::take(&mut self.evals);
        if old.player != player || old.is_empty() {
            return None;
        }
        let step_depth = match self.config.mode {
            SearchMode::SinglePlayer => 1,
            SearchMode::TwoPlayer => 2,
        };
        let candidate = old.nodes.iter().enumerate().skip(1).find(|(_, n)| {
            n.depth == step_depth
                && n.kind == NodeKind::PlayerDecision
                && !n.terminal
                && env.hash(&old.states[n.state]) == root_hash
        });
        let (new_root, _) = candidate?;
        Some(reroot(&old, &evals, new_root as NodeId))
    }
}

fn validate(cfg: &SearchConfig) -> Result<(), SearchError> {
    if cfg.simulations == 0 {
        return Err(SearchError::NoSimulations);
    }
    if !(cfg.c_puct.is_finite() && cfg.c_puct >= 0.0) {
        return Err(SearchError::Config("c_puct must be finite and non-negative"));
    }
    if !(cfg.temperature.is_finite() && cfg.temperature >= 0.0) {
        return Err(SearchError::Config("temperature must be finite and non-negative"));
    }
    if cfg.max_depth == 0 {
        return Err(SearchError::Config("max_depth must be at least 1"));
    }
    if let Some((eps, conc)) = cfg.root_noise {
        if !(0.0..=1.0).contains(&eps) || !(conc > 0.0) {
            return Err(SearchError::Config("noise needs epsilon in [0, 1] and concentration > 0"));
        }
    }
    Ok(())
}

fn reroot<S: Clone>(old: &SearchTree<S>, evals: &[EvalCache], new_root: NodeId) -> (SearchTree<S>, Vec<EvalCache>) {
    let base_depth = old.node(new_root).depth;
    let mut tree = SearchTree {
        nodes: Vec::new(),
        states: Vec::new(),
        player: old.player,
    };
    let mut new_evals = Vec::new();
    let mut state_map = std::collections::HashMap::new();
    let mut queue = std::collections::VecDeque::from([(new_root, None)]);
    while let Some((old_id, parent)) = queue.pop_front() {
        let mut node = old.node(old_id).clone();
        let state = *state_map.entry(node.state).or_insert_with(|| {
            tree.states.push(old.states[node.state].clone());
            new_evals.push(evals[node.state]);
            tree.states.len() - 1
        });
        node.state = state;
        node.depth -= base_depth;
        node.parent = parent;
        let id = tree.nodes.len() as NodeId;
        for a in Action::ALL {
            if let Some(c) = node.children[a.index()].take() {
                queue.push_back((c, Some((id, a))));
            }
        }
        if let Some((p, a)) = parent {
            tree.nodes[p as usize].children[a.index()] = Some(id);
        }
        tree.nodes.push(node);
    }
    (tree, new_evals)
}

fn masked_priors(p: &[f32; NUM_ACTIONS], legal: &[bool; NUM_ACTIONS]) -> [f32; NUM_ACTIONS] {
    let mut out = [0.0; NUM_ACTIONS];
    let mut sum = 0.0;
    for i in 0..NUM_ACTIONS {
        if legal[i] {
            out[i] = p[i].max(0.0);
            sum += out[i];
        }
    }
    let count = legal.iter().filter(|&&l| l).count();
    for i in 0..NUM_ACTIONS {
        if legal[i] {
            out[i] = if sum > 0.0 { out[i] / sum } else { 1.0 / count as f32 };
        }
    }
    out
}

fn add_noise(
    priors: &mut [f32; NUM_ACTIONS],
    legal: &[bool; NUM_ACTIONS],
    eps: f64,
    conc: f64,
    rng: &mut ChaCha8Rng,
) {
    let idx: Vec<usize> = (0..NUM_ACTIONS).filter(|&i| legal[i]).collect();
    if idx.len() < 2 {
        return;
    }
    let dir = Dirichlet::new_with_size(conc, idx.len()).expect("validated concentration");
    let eta: Vec<f64> = dir.sample(rng);
    if eta.iter().any(|x| !x.is_finite()) {
        return;
    }
    for (&i, &e) in idx.iter().zip(&eta) {
        priors[i] = ((1.0 - eps) * priors[i] as f64 + eps * e) as f32;
    }
}

fn choose(visits: &[u32; NUM_ACTIONS], temperature: f64, rng: &mut ChaCha8Rng) -> Action {
    let max = *visits.iter().max().expect("six actions");
    let argmax = visits.iter().position(|&n| n == max).expect("max exists");
    if temperature == 0.0 {
        return Action::ALL[argmax];
    }
    let weights: Vec<f64> = visits
        .iter()
        .map(|&n| (n as f64 / max as f64).powf(1.0 / temperature))
        .collect();
    match WeightedIndex::new(&weights) {
        Ok(d) => Action::ALL[d.sample(rng)],
        Err(_) => Action::ALL[argmax],
    }
}

fn evaluate<Env, E, O>(
    ctx: &mut Ctx<'_, Env, E, O>,
    states: &[Env::State],
    evals: &mut [EvalCache],
    state: usize,
    agent: AgentId,
) -> ModelOutput
where
    Env: SimulationEnvironment,
    E: Evaluator<Env::Obs> + ?Sized,
{
    if let Some(out) = evals[state][agent] {
        return out;
    }
    let t = Instant::now();
    let obs = ctx.env.observe(&states[state], agent);
    let out = ctx.model.evaluate(&obs);
    ctx.timing.model += t.elapsed();
    evals[state][agent] = Some(out);
    out
}

/// Steps `state` with the given fixed actions and opponent models for
/// every other living agent.
fn step_with_models<Env, E: ?Sized, O>(
    ctx: &mut Ctx<'_, Env, E, O>,
    state: &Env::State,
    fixed: &[(AgentId, Action)],
) -> Env::State
where
    Env: SimulationEnvironment,
    O: OpponentPolicy<Env::State>,
{
    let n = ctx.env.num_agents();
    let mut joint = vec![Action::Idle; n];
    let t = Instant::now();
    for id in 0..n {
        if let Some(&(_, a)) = fixed.iter().find(|(f, _)| *f == id) {
            joint[id] = a;
        } else if ctx.env.is_alive(state, id) {
            joint[id] = ctx.opponents[id].act(state, id);
        }
    }
    ctx.timing.opponents += t.elapsed();
    let t = Instant::now();
    let next = ctx.env.step(state, &joint);
    ctx.timing.env += t.elapsed();
    next
}

fn simulate<Env, E, O>(
    tree: &mut SearchTree<Env::State>,
    evals: &mut Vec<EvalCache>,
    ctx: &mut Ctx<'_, Env, E, O>,
) -> SimulationRecord
where
    Env: SimulationEnvironment,
    E: Evaluator<Env::Obs> + ?Sized,
    O: OpponentPolicy<Env::State>,
{
    let mut path = Vec::new();
    let mut id = SearchTree::<Env::State>::ROOT;
    let leaf = loop {
        let node = tree.node(id);
        if node.terminal || (id != 0 && node.depth >= ctx.cfg.max_depth) {
            break id;
        }
        let a = puct_select(node, ctx.cfg.c_puct, ctx.cfg.q_init);
        path.push((id, a));
        match node.child(a) {
            Some(c) => id = c,
            None => break expand(tree, evals, ctx, id, a),
        }
    };
    let value = tree.node(leaf).value as f64;
    match ctx.cfg.mode {
        SearchMode::SinglePlayer => backprop_sp(&mut tree.nodes, &path, value),
        SearchMode::TwoPlayer => backprop_negamax(&mut tree.nodes, &path, value),
    }
    SimulationRecord { path, leaf, value }
}

fn expand<Env, E, O>(
    tree: &mut SearchTree<Env::State>,
    evals: &mut Vec<EvalCache>,
    ctx: &mut Ctx<'_, Env, E, O>,
    parent: NodeId,
    a: Action,
) -> NodeId
where
    Env: SimulationEnvironment,
    E: Evaluator<Env::Obs> + ?Sized,
    O: OpponentPolicy<Env::State>,
{
    let player = ctx.player;
    let env = ctx.env;
    let pnode = tree.node(parent).clone();
    let depth = pnode.depth + 1;
    let child = match (ctx.cfg.mode, pnode.kind) {
        (SearchMode::SinglePlayer, _) => {
            let next = step_with_models(ctx, &tree.states[pnode.state], &[(player, a)]);
            let state = push_state(tree, evals, next);
            let mut node = player_node(tree, evals, ctx, state, depth);
            if !node.terminal {
                node.value = evaluate(ctx, &tree.states, evals, state, player).v;
            } else {
                node.value = exact(env, &tree.states[state], player);
            }
            node
        }
        (SearchMode::TwoPlayer, NodeKind::PlayerDecision) => {
            let s = pnode.state;
            let opp = select_opponent(env, &tree.states[s], player)
                .expect("a running game has a living opponent");
            let value = if ctx.cfg.eval_player_node_post_step {
                let next = step_with_models(ctx, &tree.states[s], &[(player, a)]);
                match env.terminal_value(&next, player) {
                    Some(v) => v,
                    None => {
                        let t = Instant::now();
                        let obs = env.observe(&next, player);
                        let v = ctx.model.evaluate(&obs).v;
                        ctx.timing.model += t.elapsed();
                        v
                    }
                }
            } else {
                evaluate(ctx, &tree.states, evals, s, player).v
            };
            let out = evaluate(ctx, &tree.states, evals, s, opp);
            let legal = env.legal_actions(&tree.states[s], opp);
            SearchNode {
                kind: NodeKind::OpponentDecision,
                state: s,
                active_agent: opp,
                pending_player_action: Some(a),
                n: [0; NUM_ACTIONS],
                w: [0.0; NUM_ACTIONS],
                p: masked_priors(&out.p, &legal),
                legal,
                children: [None; NUM_ACTIONS],
                terminal: false,
                value,
                depth,
                parent: None,
            }
        }
        (SearchMode::TwoPlayer, NodeKind::OpponentDecision) => {
            let opp = pnode.active_agent;
            let pending = pnode.pending_player_action.expect("opponent nodes carry the player action");
            let next = step_with_models(ctx, &tree.states[pnode.state], &[(player, pending), (opp, a)]);
            let state = push_state(tree, evals, next);
            let mut node = player_node(tree, evals, ctx, state, depth);
            let s = &tree.states[state];
            node.value = if node.terminal {
                -exact(env, s, player)
            } else if let Some(v) = env.terminal_value(s, opp) {
                v
            } else {
                evaluate(ctx, &tree.states, evals, state, opp).v
            };
            node
        }
    };
    let id = tree.nodes.len() as NodeId;
    tree.nodes.push(SearchNode {
        parent: Some((parent, a)),
        ..child
    });
    tree.nodes[parent as usize].children[a.index()] = Some(id);
    id
}

fn push_state<S>(tree: &mut SearchTree<S>, evals: &mut Vec<EvalCache>, state: S) -> usize {
    tree.states.push(state);
    evals.push([None; MAX_AGENTS]);
    tree.states.len() - 1
}

fn exact<Env: SimulationEnvironment>(env: &Env, state: &Env::State, agent: AgentId) -> f32 {
    env.terminal_value(state, agent).expect("decided outcome")
}

/// A player decision node on `state`, terminal when the player's outcome is
/// decided. Priors come from the player's view; the value is left to the
/// caller.
fn player_node<Env, E, O>(
    tree: &SearchTree<Env::State>,
    evals: &mut [EvalCache],
    ctx: &mut Ctx<'_, Env, E, O>,
    state: usize,
    depth: u32,
) -> SearchNode
where
    Env: SimulationEnvironment,
    E: Evaluator<Env::Obs> + ?Sized,
{
    let player = ctx.player;
    let s = &tree.states[state];
    let terminal = ctx.env.is_terminal(s) || ctx.env.terminal_value(s, player).is_some();
    let (p, legal) = if terminal {
        ([0.0; NUM_ACTIONS], [false; NUM_ACTIONS])
    } else {
        let legal = ctx.env.legal_actions(s, player);
        let out = evaluate(ctx, &tree.states, evals, state, player);
        (masked_priors(&out.p, &legal), legal)
    };
    SearchNode {
        kind: NodeKind::PlayerDecision,
        state,
        active_agent: player,
        pending_player_action: None,
        n: [0; NUM_ACTIONS],
        w: [0.0; NUM_ACTIONS],
        p,
        legal,
        children: [None; NUM_ACTIONS],
        terminal,
        value: 0.0,
        depth,
        parent: None,
    }
}
