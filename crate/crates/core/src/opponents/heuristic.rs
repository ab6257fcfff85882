use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{
    blast_map, Action, AgentId, CellKind, Direction, GameState, Position, BOARD_SIZE,
    BOMB_FUSE,
};

use super::filter::{can_escape_own_bomb, escape_step, keeps_escape, safe_actions_with};
use super::ActionSet;

const DANGER_HORIZON: u8 = 3;
const ITEM_RANGE: u8 = 10;
const ENEMY_RANGE: u8 = 3;

/// Scripted baseline agent.
///
/// The generator is used for exactly two draws: a shuffled neighbour order
/// and one integer that picks the fallback action. Nothing depends on the
/// agent id, so the agent plays the same from every corner.
pub fn simple_act<R: Rng + ?Sized>(state: &GameState, agent: AgentId, rng: &mut R) -> Action {
    let mut order = Direction::ALL;
    order.shuffle(rng);
    let pick: u32 = rng.gen();
    simple_act_with(state, agent, order, pick)
}

/// [`simple_act`] with its random draws given explicitly.
///
/// Priorities, first match wins:
/// 1. own cell burns within 3 ticks: step towards the nearest safe cell;
/// 2. a revealed item within 10 steps: step towards it;
/// 3. an enemy within 3 steps, ammo left and an escape after placing: bomb;
/// 4. wood next to the agent, ammo left and an escape after placing: bomb;
/// 5. step towards the nearest reachable enemy;
/// 6. a random action among the safe ones.
///
/// Moves from rules 2 and 5 are taken only when they are safe, do not enter
/// a cell that burns within 3 ticks and leave a way out of every known
/// blast. Rule 6 prefers actions that leave such a way out.
pub fn simple_act_with(state: &GameState, agent: AgentId, order: [Direction; 4], pick: u32) -> Action {
    let me = &state.agents[agent];
    if !me.alive {
        return Action::Idle;
    }
    let blast = blast_map(state, BOMB_FUSE);
    let safe = safe_actions_with(state, agent, &blast);
    let fallback = || {
        let mut sheltered = safe;
        for a in safe.iter() {
            if a != Action::PlaceBomb && !keeps_escape(state, &blast, agent, a) {
                sheltered.remove(a);
            }
        }
        random_safe(if sheltered.is_empty() { safe } else { sheltered }, &order, pick)
    };

    if blast.within(me.pos, DANGER_HORIZON) {
        return match escape_step(state, &blast, agent, &order) {
            Some(Some(dir)) if safe.contains(dir.action()) => dir.action(),
            _ => fallback(),
        };
    }

    let bfs = Bfs::run(state, agent, &order);
    let calm = |dir: Direction| {
        let next = me.pos.offset(dir).expect("bfs steps stay on the board");
        safe.contains(dir.action())
            && !blast.within(next, DANGER_HORIZON)
            && keeps_escape(state, &blast, agent, dir.action())
    };

    if let Some(dir) = bfs.nearest_item.filter(|&(_, d)| d <= ITEM_RANGE).and_then(|(p, _)| bfs.first[p.index()]) {
        if calm(dir) {
            return dir.action();
        }
    }

    let can_bomb = me.ammo > 0
        && state.bomb_at(me.pos).is_none()
        && safe.contains(Action::PlaceBomb)
        && can_escape_own_bomb(state, agent, &order);
    if can_bomb {
        if bfs.nearest_enemy.is_some_and(|(_, d)| d <= ENEMY_RANGE) {
            return Action::PlaceBomb;
        }
        if me.pos.neighbors().any(|q| state.cell(q) == CellKind::Wood) {
            return Action::PlaceBomb;
        }
    }

    if let Some((p, _)) = bfs.nearest_enemy {
        if let Some(dir) = bfs.first[p.index()] {
            if calm(dir) {
                return dir.action();
            }
        }
    }
    fallback()
}

fn random_safe(safe: ActionSet, order: &[Direction; 4], pick: u32) -> Action {
    let mut options = Vec::with_capacity(6);
    options.push(Action::Idle);
    options.extend(order.iter().map(|d| d.action()));
    options.push(Action::PlaceBomb);
    options.retain(|&a| safe.contains(a));
    options[pick as usize % options.len()]
}

/// Breadth-first search from the agent over free cells.
struct Bfs {
    /// First step on the path to each reached cell.
    first: [Option<Direction>; BOARD_SIZE * BOARD_SIZE],
    /// Closest revealed item and its distance.
    nearest_item: Option<(Position, u8)>,
    /// Closest free cell next to an enemy and the distance to the enemy.
    nearest_enemy: Option<(Position, u8)>,
}

impl Bfs {
    fn run(state: &GameState, agent: AgentId, order: &[Direction; 4]) -> Self {
        let start = state.agents[agent].pos;
        let mut out = Bfs {
            first: [None; BOARD_SIZE * BOARD_SIZE],
            nearest_item: None,
            nearest_enemy: None,
        };
        let mut seen = [false; BOARD_SIZE * BOARD_SIZE];
        seen[start.index()] = true;
        let mut queue = VecDeque::from([(start, 0u8)]);
        while let Some((p, d)) = queue.pop_front() {
            for &dir in order {
                let Some(q) = p.offset(dir) else { continue };
                if seen[q.index()] {
                    continue;
                }
                if let Some(other) = state.agent_at(q) {
                    if other != agent && out.nearest_enemy.is_none() {
                        out.nearest_enemy = Some((p, d + 1));
                    }
                    continue;
                }
                let free = state.cell(q).walkable() && state.bomb_at(q).is_none() && state.flame_at(q).is_none();
                if !free {
                    continue;
                }
                seen[q.index()] = true;
                out.first[q.index()] = if p == start { Some(dir) } else { out.first[p.index()] };
                if out.nearest_item.is_none() && state.cell(q).item().is_some() {
                    out.nearest_item = Some((q, d + 1));
                }
                queue.push_back((q, d + 1));
            }
        }
        out
    }
}
