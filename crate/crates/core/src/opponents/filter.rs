use std::collections::VecDeque;

use crate::engine::{
    blast_map, Action, AgentId, BlastMap, Bomb, Direction, GameState, Position, BOARD_SIZE,
    BOMB_FUSE,
};

use super::ActionSet;

/// Furthest an escape search looks.
const ESCAPE_DEPTH: u8 = 12;

/// Where a move would take the agent, ignoring other agents. Blocked moves
/// leave it in place.
pub(super) fn destination(state: &GameState, agent: AgentId, dir: Direction) -> Position {
    let me = &state.agents[agent];
    let Some(next) = me.pos.offset(dir) else {
        return me.pos;
    };
    if !state.cell(next).walkable() {
        return me.pos;
    }
    if state.bomb_at(next).is_some() {
        let kickable = me.can_kick
            && next.offset(dir).is_some_and(|b| {
                state.cell(b).walkable() && state.bomb_at(b).is_none() && state.agent_at(b).is_none()
            });
        if !kickable {
            return me.pos;
        }
    }
    next
}

/// First step towards the closest cell no known blast reaches, walking only
/// through cells the agent enters before they burn. `Some(None)` means the
/// current cell is already safe.
pub(super) fn escape_step(
    state: &GameState,
    blast: &BlastMap,
    agent: AgentId,
    order: &[Direction; 4],
) -> Option<Option<Direction>> {
    escape_from(state, blast, agent, state.agents[agent].pos, 0, order)
}

/// Whether the agent still has a way out after `action`, assuming nothing
/// else changes during the tick it takes.
pub(super) fn keeps_escape(state: &GameState, blast: &BlastMap, agent: AgentId, action: Action) -> bool {
    let dest = match action.direction() {
        Some(dir) => destination(state, agent, dir),
        None => state.agents[agent].pos,
    };
    match blast.get(dest) {
        None => true,
        Some(t) if t <= 1 => false,
        Some(_) => escape_from(state, blast, agent, dest, 1, &Direction::ALL).is_some(),
    }
}

/// [`escape_step`] from `start`, `t0` ticks from now.
fn escape_from(
    state: &GameState,
    blast: &BlastMap,
    agent: AgentId,
    start: Position,
    t0: u8,
    order: &[Direction; 4],
) -> Option<Option<Direction>> {
    if blast.get(start).is_none() {
        return Some(None);
    }
    let mut first: [Option<Direction>; BOARD_SIZE * BOARD_SIZE] = [None; BOARD_SIZE * BOARD_SIZE];
    let mut seen = [false; BOARD_SIZE * BOARD_SIZE];
    seen[start.index()] = true;
    let mut queue = VecDeque::from([(start, t0)]);
    while let Some((p, d)) = queue.pop_front() {
        if d >= ESCAPE_DEPTH + t0 {
            continue;
        }
        for &dir in order {
            let Some(q) = p.offset(dir) else { continue };
            if seen[q.index()] || !state.cell(q).walkable() || state.bomb_at(q).is_some() {
                continue;
            }
            if state.agent_at(q).is_some_and(|other| other != agent) {
                continue;
            }
            let arrive = d + 1;
            if blast.get(q).is_some_and(|t| t <= arrive) {
                continue;
            }
            seen[q.index()] = true;
            first[q.index()] = if p == start { Some(dir) } else { first[p.index()] };
            if blast.get(q).is_none() {
                return Some(first[q.index()]);
            }
            queue.push_back((q, arrive));
        }
    }
    None
}

/// Whether placing a bomb now still leaves a way out.
pub(super) fn can_escape_own_bomb(state: &GameState, agent: AgentId, order: &[Direction; 4]) -> bool {
    let me = &state.agents[agent];
    let mut hyp = state.clone();
    hyp.insert_bomb(Bomb {
        pos: me.pos,
        owner: agent,
        countdown: BOMB_FUSE,
        blast_strength: me.blast_strength,
        moving_dir: None,
    });
    let blast = blast_map(&hyp, BOMB_FUSE);
    matches!(escape_step(&hyp, &blast, agent, order), Some(Some(_)))
}

/// Actions that do not walk into fire.
///
/// Removed are: moves into a flame or into a cell that burns on the next
/// tick; staying on a cell that burns on the next tick while some move
/// avoids it; placing a bomb without ammo; placing a bomb that leaves no
/// escape route. If nothing survives, the legal set is returned.
pub fn safe_actions(state: &GameState, agent: AgentId) -> ActionSet {
    let blast = blast_map(state, BOMB_FUSE);
    safe_actions_with(state, agent, &blast)
}

pub(super) fn safe_actions_with(state: &GameState, agent: AgentId, blast: &BlastMap) -> ActionSet {
    let me = &state.agents[agent];
    let mut legal = ActionSet::ALL;
    if me.ammo == 0 {
        legal.remove(Action::PlaceBomb);
    }
    if !me.alive {
        return legal;
    }

    let burns_next = |p: Position| blast.get(p) == Some(1);
    let mut set = legal;
    let mut stays = ActionSet::only(Action::Idle);
    for dir in Direction::ALL {
        let dest = destination(state, agent, dir);
        if dest == me.pos {
            stays.insert(dir.action());
        } else if state.flame_at(dest).is_some() || burns_next(dest) {
            set.remove(dir.action());
        }
    }
    let bomb_here = state.bomb_at(me.pos).is_some();
    if set.contains(Action::PlaceBomb) {
        if bomb_here {
            stays.insert(Action::PlaceBomb);
        } else if !can_escape_own_bomb(state, agent, &Direction::ALL) {
            set.remove(Action::PlaceBomb);
        }
    }
    if burns_next(me.pos) {
        let moving_away = set.iter().any(|a| !stays.contains(a) && a != Action::PlaceBomb);
        if moving_away {
            for a in stays.iter() {
                set.remove(a);
            }
            set.remove(Action::PlaceBomb);
        }
    }
    if set.is_empty() {
        legal
    } else {
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{CellKind, Flame};

    fn bomb(pos: Position, countdown: u8) -> Bomb {
        Bomb {
            pos,
            owner: 3,
            countdown,
            blast_strength: 2,
            moving_dir: None,
        }
    }

    #[test]
    fn open_field_allows_everything() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(5, 5);
        assert_eq!(safe_actions(&s, 0), ActionSet::ALL);
    }

    #[test]
    fn surrounded_by_flames_stays() {
        let mut s = GameState::empty();
        let c = Position::new(5, 5);
        s.agents[0].pos = c;
        for q in c.neighbors() {
            s.insert_flame(Flame { pos: q, ttl: 2 });
        }
        assert_eq!(safe_actions(&s, 0), ActionSet::only(Action::Idle));
    }

    #[test]
    fn leaves_a_cell_about_to_burn() {
        let mut s = GameState::empty();
        let c = Position::new(5, 5);
        s.agents[0].pos = c;
        s.insert_bomb(bomb(Position::new(5, 6), 1));
        // right is the bomb, left and up and down reachable; wall off two
        s.set_cell(Position::new(4, 5), CellKind::Rigid);
        s.set_cell(Position::new(6, 5), CellKind::Rigid);
        assert_eq!(safe_actions(&s, 0), ActionSet::only(Action::Left));
    }

    #[test]
    fn no_ammo_no_bomb() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(5, 5);
        s.agents[0].ammo = 0;
        assert!(!safe_actions(&s, 0).contains(Action::PlaceBomb));
    }

    #[test]
    fn dead_end_forbids_bomb() {
        let mut s = GameState::empty();
        // corridor of length one
        let c = Position::new(5, 5);
        s.agents[0].pos = c;
        for q in [Position::new(4, 5), Position::new(6, 5), Position::new(5, 4)] {
            s.set_cell(q, CellKind::Rigid);
        }
        s.set_cell(Position::new(5, 7), CellKind::Rigid);
        s.set_cell(Position::new(4, 6), CellKind::Rigid);
        s.set_cell(Position::new(6, 6), CellKind::Rigid);
        assert!(!safe_actions(&s, 0).contains(Action::PlaceBomb));
        s.set_cell(Position::new(4, 6), CellKind::Passage);
        assert!(safe_actions(&s, 0).contains(Action::PlaceBomb));
    }

    #[test]
    fn doomed_agent_keeps_idle() {
        let mut s = GameState::empty();
        let c = Position::new(5, 5);
        s.agents[0].pos = c;
        s.agents[0].ammo = 0;
        s.insert_bomb(bomb(c, 1));
        for q in c.neighbors() {
            s.insert_flame(Flame { pos: q, ttl: 2 });
        }
        assert_eq!(safe_actions(&s, 0), ActionSet::only(Action::Idle));
    }

    #[test]
    fn escape_finds_nearest_safe_cell() {
        let mut s = GameState::empty();
        let c = Position::new(5, 5);
        s.agents[0].pos = c;
        s.insert_bomb(bomb(c, 3));
        s.set_cell(Position::new(4, 5), CellKind::Rigid);
        s.set_cell(Position::new(6, 5), CellKind::Rigid);
        s.set_cell(Position::new(5, 6), CellKind::Rigid);
        let blast = blast_map(&s, BOMB_FUSE);
        assert_eq!(escape_step(&s, &blast, 0, &Direction::ALL), Some(Some(Direction::Left)));
        s.set_cell(Position::new(5, 4), CellKind::Rigid);
        assert_eq!(escape_step(&s, &blast_map(&s, BOMB_FUSE), 0, &Direction::ALL), None);
    }
}
