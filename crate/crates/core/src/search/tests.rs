use super::*;
use crate::engine::{AgentOutcome, Position};
use crate::model::Uniform;

/// One walker on a line; reaching `GOAL` wins, running out of time loses.
#[derive(Clone, Copy)]
struct Corridor;

#[derive(Clone, Debug, PartialEq)]
struct Walk {
    pos: i32,
    t: u32,
}

const GOAL: i32 = 3;
const LIMIT: u32 = 5;

impl SimulationEnvironment for Corridor {
    type State = Walk;
    type Obs = ();

    fn num_agents(&self) -> usize {
        1
    }
    fn is_alive(&self, _: &Walk, _: AgentId) -> bool {
        true
    }
    fn is_terminal(&self, s: &Walk) -> bool {
        s.pos == GOAL || s.t >= LIMIT
    }
    fn step(&self, s: &Walk, joint: &[Action]) -> Walk {
        let d = match joint[0] {
            Action::Right => 1,
            Action::Left => -1,
            _ => 0,
        };
        Walk {
            pos: s.pos + d,
            t: s.t + 1,
        }
    }
    fn outcome(&self, s: &Walk, _: AgentId) -> AgentOutcome {
        if s.pos == GOAL {
            AgentOutcome::Win
        } else if s.t >= LIMIT {
            AgentOutcome::Loss
        } else {
            AgentOutcome::Ongoing
        }
    }
    fn observe(&self, _: &Walk, _: AgentId) {}
    fn position(&self, s: &Walk, _: AgentId) -> Position {
        Position::new(0, (s.pos + 5).clamp(0, 10) as u8)
    }
    fn hash(&self, s: &Walk) -> u64 {
        (s.pos as u64) << 32 | s.t as u64
    }
}

/// Both agents pick once; the player gets `PAYOFF[a][b]`, the opponent the
/// negation.
#[derive(Clone, Copy)]
struct Duel;

#[derive(Clone, Debug, PartialEq)]
struct Picks(Option<(usize, usize)>);

const PAYOFF: [[f32; 6]; 6] = [
    [0.2, 0.5, -0.1, 0.3, 0.4, 0.9],
    [0.6, 0.7, 0.8, 0.6, 0.9, 0.55],
    [-0.5, 1.0, 1.0, 1.0, 1.0, 1.0],
    [0.95, 0.1, 0.2, 0.3, 0.4, 0.5],
    [0.3, -0.3, 0.3, -0.3, 0.3, -0.3],
    [0.45, 0.45, 0.45, 0.45, 0.45, 0.45],
];

impl SimulationEnvironment for Duel {
    type State = Picks;
    type Obs = ();

    fn num_agents(&self) -> usize {
        2
    }
    fn is_alive(&self, _: &Picks, _: AgentId) -> bool {
        true
    }
    fn is_terminal(&self, s: &Picks) -> bool {
        s.0.is_some()
    }
    fn step(&self, _: &Picks, joint: &[Action]) -> Picks {
        Picks(Some((joint[0].index(), joint[1].index())))
    }
    fn outcome(&self, s: &Picks, agent: AgentId) -> AgentOutcome {
        match self.terminal_value(s, agent) {
            None => AgentOutcome::Ongoing,
            Some(v) if v > 0.0 => AgentOutcome::Win,
            Some(v) if v < 0.0 => AgentOutcome::Loss,
            Some(_) => AgentOutcome::Draw,
        }
    }
    fn terminal_value(&self, s: &Picks, agent: AgentId) -> Option<f32> {
        let (a, b) = s.0?;
        Some(if agent == 0 { PAYOFF[a][b] } else { -PAYOFF[a][b] })
    }
    fn observe(&self, _: &Picks, _: AgentId) {}
    fn position(&self, _: &Picks, agent: AgentId) -> Position {
        Position::new(0, agent as u8)
    }
    fn hash(&self, s: &Picks) -> u64 {
        s.0.map_or(u64::MAX, |(a, b)| (a * 6 + b) as u64)
    }
}

fn idle<S>(_: &S, _: AgentId) -> Action {
    Action::Idle
}

fn sp(simulations: u32) -> SearchConfig {
    SearchConfig {
        simulations,
        ..SearchConfig::default()
    }
}

fn tp(simulations: u32) -> SearchConfig {
    SearchConfig {
        mode: SearchMode::TwoPlayer,
        simulations,
        ..SearchConfig::default()
    }
}

fn start() -> Walk {
    Walk { pos: 0, t: 0 }
}

/// Strips timings so results can be compared.
fn comparable(r: &SearchResult) -> SearchResult {
    SearchResult {
        elapsed: Duration::ZERO,
        timing: SearchTiming::default(),
        ..r.clone()
    }
}

#[test]
fn corridor_is_solved() {
    let r = run(&Corridor, &Uniform, &[idle], &start(), 0, &sp(400)).unwrap();
    assert_eq!(r.chosen_action, Action::Right);
    assert_eq!(r.pv, vec![Action::Right; 3]);
    assert_eq!(r.visits.iter().sum::<u32>(), 400);
    assert!((r.pi.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    let q_right = r.q[Action::Right.index()].unwrap();
    assert!(r.q.iter().flatten().all(|&q| q <= q_right));
}

#[test]
fn one_simulation_adds_one_node() {
    for cfg in [sp(1), tp(1)] {
        let mut s = Searcher::new(cfg);
        let r = s.search(&Corridor2, &Uniform, &[idle, idle], &Walk2::default(), 0).unwrap();
        assert_eq!(r.node_count, 2);
        assert!(r.pv.len() <= 1);
    }
    let r = run(&Corridor, &Uniform, &[idle], &start(), 0, &sp(37)).unwrap();
    assert_eq!(r.node_count, 38);
}

#[test]
fn sp_tree_shape_and_running_means() {
    let mut s = Searcher::new(sp(300));
    s.record_simulations(true);
    s.search(&Corridor, &Uniform, &[idle], &start(), 0).unwrap();
    let tree = s.tree().unwrap();
    let mut w = vec![[0.0f64; 6]; tree.len()];
    let mut n = vec![[0u32; 6]; tree.len()];
    for rec in s.simulation_log() {
        for &(id, a) in &rec.path {
            w[id as usize][a.index()] += rec.value;
            n[id as usize][a.index()] += 1;
        }
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        assert_eq!(node.kind, NodeKind::PlayerDecision);
        assert!(node.num_children() <= 6);
        assert_eq!(node.n, n[i]);
        assert_eq!(node.w, w[i]);
        for a in Action::ALL {
            if let Some(q) = node.q(a) {
                assert_eq!(q, w[i][a.index()] / n[i][a.index()] as f64);
            }
        }
    }
}

#[test]
fn tp_alternates_and_negates() {
    let mut s = Searcher::new(tp(500));
    s.record_simulations(true);
    s.search(&Corridor2, &Uniform, &[idle, idle], &Walk2::default(), 0).unwrap();
    let tree = s.tree().unwrap();
    for node in &tree.nodes[1..] {
        let (p, _) = node.parent.unwrap();
        let parent = tree.node(p);
        assert_ne!(node.kind, parent.kind);
        assert_eq!(node.depth, parent.depth + 1);
        match node.kind {
            NodeKind::OpponentDecision => {
                assert_eq!(node.state, parent.state);
                assert_eq!(node.active_agent, 1);
                assert!(node.pending_player_action.is_some());
            }
            NodeKind::PlayerDecision => assert_eq!(node.active_agent, 0),
        }
    }
    assert_eq!(get_active_agent(tree, 0), 0);
    // recompute W from the log with the sign flipping per ply
    let mut w = vec![[0.0f64; 6]; tree.len()];
    for rec in s.simulation_log() {
        let mut v = rec.value;
        for &(id, a) in rec.path.iter().rev() {
            w[id as usize][a.index()] += v;
            v = -v;
        }
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        assert_eq!(node.w, w[i]);
    }
}

/// Two walkers on separate lines; the first to reach the goal wins.
#[derive(Clone, Copy)]
struct Corridor2;

#[derive(Clone, Debug, Default, PartialEq)]
struct Walk2 {
    pos: [i32; 2],
    t: u32,
}

impl SimulationEnvironment for Corridor2 {
    type State = Walk2;
    type Obs = ();

    fn num_agents(&self) -> usize {
        2
    }
    fn is_alive(&self, _: &Walk2, _: AgentId) -> bool {
        true
    }
    fn is_terminal(&self, s: &Walk2) -> bool {
        s.pos.contains(&GOAL) || s.t >= LIMIT
    }
    fn step(&self, s: &Walk2, joint: &[Action]) -> Walk2 {
        let mut next = s.clone();
        for i in 0..2 {
            next.pos[i] += match joint[i] {
                Action::Right => 1,
                Action::Left => -1,
                _ => 0,
            };
        }
        next.t += 1;
        next
    }
    fn outcome(&self, s: &Walk2, agent: AgentId) -> AgentOutcome {
        let mine = s.pos[agent] == GOAL;
        let theirs = s.pos[1 - agent] == GOAL;
        match (mine, theirs) {
            (true, false) => AgentOutcome::Win,
            (false, true) => AgentOutcome::Loss,
            (true, true) => AgentOutcome::Draw,
            _ if s.t >= LIMIT => AgentOutcome::Draw,
            _ => AgentOutcome::Ongoing,
        }
    }
    fn observe(&self, _: &Walk2, _: AgentId) {}
    fn position(&self, s: &Walk2, agent: AgentId) -> Position {
        Position::new(agent as u8, (s.pos[agent] + 5).clamp(0, 10) as u8)
    }
    fn hash(&self, s: &Walk2) -> u64 {
        ((s.pos[0] as u64) << 40) ^ ((s.pos[1] as u64) << 20) ^ s.t as u64
    }
}

#[test]
fn duel_reaches_negamax_values() {
    let r = run(&Duel, &Uniform, &[idle, idle], &Picks(None), 0, &tp(20_000)).unwrap();
    let oracle: Vec<f32> = PAYOFF
        .iter()
        .map(|row| row.iter().copied().fold(f32::INFINITY, f32::min))
        .collect();
    let best = (0..6).max_by(|&a, &b| oracle[a].total_cmp(&oracle[b]).then(b.cmp(&a))).unwrap();
    assert_eq!(r.chosen_action.index(), best);
    let q_best = r.q[best].unwrap();
    assert!((q_best - oracle[best]).abs() < 0.05, "{q_best} vs {}", oracle[best]);
}

#[test]
fn sp_on_duel_trusts_the_model() {
    // the opponent always answers with its first action
    let r = run(&Duel, &Uniform, &[idle, idle], &Picks(None), 0, &sp(2000)).unwrap();
    assert_eq!(r.chosen_action, Action::Left);
}

#[test]
fn search_is_deterministic() {
    let cfg = SearchConfig {
        temperature: 1.0,
        root_noise: Some(DEFAULT_NOISE),
        search_seed: 11,
        ..tp(300)
    };
    let a = run(&Corridor2, &Uniform, &[idle, idle], &Walk2::default(), 0, &cfg).unwrap();
    let b = run(&Corridor2, &Uniform, &[idle, idle], &Walk2::default(), 0, &cfg).unwrap();
    assert_eq!(comparable(&a), comparable(&b));
}

#[test]
fn temperature_zero_takes_argmax() {
    let visits = [3, 7, 7, 0, 1, 0];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(choose(&visits, 0.0, &mut rng), Action::Up);
    for _ in 0..50 {
        let a = choose(&visits, 1.0, &mut rng);
        assert!(visits[a.index()] > 0);
    }
}

#[test]
fn noise_keeps_priors_on_simplex() {
    let mut p = [1.0 / 6.0; 6];
    let legal = [true, true, false, true, true, true];
    p[2] = 0.0;
    let mut p = masked_priors(&p, &legal);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    add_noise(&mut p, &legal, 0.25, 0.2, &mut rng);
    assert_eq!(p[2], 0.0);
    assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    assert!(p.iter().any(|&x| (x - 0.2).abs() > 1e-3));
}

#[test]
fn errors() {
    let done = Walk { pos: GOAL, t: 2 };
    assert_eq!(run(&Corridor, &Uniform, &[idle], &done, 0, &sp(5)), Err(SearchError::TerminalRoot));
    assert_eq!(run(&Corridor, &Uniform, &[idle], &start(), 0, &sp(0)), Err(SearchError::NoSimulations));
    assert_eq!(
        run(&Corridor, &Uniform, &[idle, idle], &start(), 0, &sp(5)),
        Err(SearchError::OpponentCount { expected: 1, found: 2 })
    );
}

#[test]
fn reuse_keeps_the_subtree() {
    let cfg = SearchConfig {
        reuse_tree: true,
        ..sp(200)
    };
    let mut s = Searcher::new(cfg);
    let r = s.search(&Corridor, &Uniform, &[idle], &start(), 0).unwrap();
    let child = s.tree().unwrap().root().child(r.chosen_action).unwrap();
    let carried = s.tree().unwrap().node(child).visits();
    let next = Corridor.step(&start(), &[r.chosen_action]);
    let r2 = s.search(&Corridor, &Uniform, &[idle], &next, 0).unwrap();
    assert_eq!(r2.visits.iter().sum::<u32>(), carried + 200);
    let tree = s.tree().unwrap();
    assert_eq!(tree.states[tree.root().state], next);
    for node in &tree.nodes[1..] {
        let (p, a) = node.parent.unwrap();
        assert_eq!(tree.node(p).child(a).map(|c| tree.node(c).depth), Some(node.depth));
    }
}

#[test]
fn depth_cap_stops_descent() {
    let cfg = SearchConfig {
        max_depth: 2,
        ..sp(200)
    };
    let r = run(&Corridor, &Uniform, &[idle], &start(), 0, &cfg).unwrap();
    assert_eq!(r.depth_max, 2);
}
