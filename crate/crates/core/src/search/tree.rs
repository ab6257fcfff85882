use crate::engine::{Action, AgentId, NUM_ACTIONS};

pub type NodeId = u32;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    PlayerDecision,
    OpponentDecision,
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub kind: NodeKind,
    /// Index into the tree's state table. An opponent node shares the state
    /// of its parent.
    pub state: usize,
    pub active_agent: AgentId,
    pub pending_player_action: Option<Action>,
    pub n: [u32; NUM_ACTIONS],
    pub w: [f64; NUM_ACTIONS],
    pub p: [f32; NUM_ACTIONS],
    pub legal: [bool; NUM_ACTIONS],
    pub children: [Option<NodeId>; NUM_ACTIONS],
    pub terminal: bool,
    /// Value of the node for the agent that moved into it; exact when
    /// terminal.
    pub value: f32,
    pub depth: u32,
    pub parent: Option<(NodeId, Action)>,
}

impl SearchNode {
    pub fn visits(&self) -> u32 {
        self.n.iter().sum()
    }

    pub fn q(&self, a: Action) -> Option<f64> {
        let i = a.index();
        (self.n[i] > 0).then(|| self.w[i] / self.n[i] as f64)
    }

    pub fn child(&self, a: Action) -> Option<NodeId> {
        self.children[a.index()]
    }

    pub fn num_children(&self) -> usize {
        self.children.iter().flatten().count()
    }

    /// Most visited action, lowest index on ties; `None` before any visit.
    pub fn best_action(&self) -> Option<Action> {
        let (i, &n) = self
            .n
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        (n > 0).then(|| Action::ALL[i])
    }
}

/// Nodes and the environment states they refer to.
#[derive(Clone, Debug)]
pub struct SearchTree<S> {
    pub nodes: Vec<SearchNode>,
    pub states: Vec<S>,
    pub player: AgentId,
}

impl<S> SearchTree<S> {
    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id as usize]
    }

    pub fn state_of(&self, id: NodeId) -> &S {
        &self.states[self.node(id).state]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `argmax_a Q + c * P * sqrt(sum N) / (1 + N)` over legal actions, with
/// `Q = q_init` for unvisited actions. The square root is taken of
/// `max(sum N, 1)` so a fresh node follows its prior. Lowest index wins ties.
pub fn puct_select(node: &SearchNode, c_puct: f64, q_init: f64) -> Action {
    let total = node.visits().max(1) as f64;
    let sqrt_total = total.sqrt();
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &legal) in node.legal.iter().enumerate() {
        if !legal {
            continue;
        }
        let n = node.n[i] as f64;
        let q = if node.n[i] == 0 { q_init } else { node.w[i] / n };
        let u = c_puct * node.p[i] as f64 * sqrt_total / (1.0 + n);
        let score = q + u;
        if best.is_none() || score > best_score {
            best = Some(i);
            best_score = score;
        }
    }
    Action::ALL[best.expect("node has a legal action")]
}

/// Adds `leaf_value` to every edge of the path.
pub fn backprop_sp(nodes: &mut [SearchNode], path: &[(NodeId, Action)], leaf_value: f64) {
    for &(id, a) in path {
        let node = &mut nodes[id as usize];
        node.n[a.index()] += 1;
        node.w[a.index()] += leaf_value;
    }
}

/// Adds `leaf_value` to the last edge and flips the sign at every step
/// towards the root.
pub fn backprop_negamax(nodes: &mut [SearchNode], path: &[(NodeId, Action)], leaf_value: f64) {
    let mut v = leaf_value;
    for &(id, a) in path.iter().rev() {
        let node = &mut nodes[id as usize];
        node.n[a.index()] += 1;
        node.w[a.index()] += v;
        v = -v;
    }
}

/// Greedy most-visited descent from the root.
pub fn principal_variation<S>(tree: &SearchTree<S>, max_len: usize) -> Vec<Action> {
    let mut out = Vec::new();
    if tree.is_empty() {
        return out;
    }
    let mut id = SearchTree::<S>::ROOT;
    while out.len() < max_len {
        let node = tree.node(id);
        if node.terminal {
            break;
        }
        let Some(a) = node.best_action() else { break };
        let Some(child) = node.child(a) else { break };
        out.push(a);
        id = child;
    }
    out
}

/// The agent whose action branches at `id`.
pub fn get_active_agent<S>(tree: &SearchTree<S>, id: NodeId) -> AgentId {
    tree.node(id).active_agent
}

/// `0.5 * pi + 0.5 * onehot(argmax pi)` with the lowest index taken on ties.
pub fn policy_target_sharpen(pi: &[f32; NUM_ACTIONS]) -> [f32; NUM_ACTIONS] {
    let mut best = 0;
    for (i, &x) in pi.iter().enumerate() {
        if x > pi[best] {
            best = i;
        }
    }
    let mut out = pi.map(|x| 0.5 * x);
    out[best] += 0.5;
    out
}
