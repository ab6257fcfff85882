use thiserror::Error;

use super::{
    Action, AgentId, Bomb, CellKind, Direction, Flame, GameState, Item, Position, BOARD_SIZE,
    BOMB_FUSE, FLAME_TTL, NUM_AGENTS,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("cannot step a terminal state (step {step_count}, {alive} agents alive)")]
    Terminal { step_count: u16, alive: usize },
}

/// Advances the game by one tick. The input state is left untouched.
///
/// Tick order:
/// 1. flame lifetimes tick down, expired flames vanish, fuses of bombs
///    already on the board tick down;
/// 2. actions resolve: bomb placement, then simultaneous movement with
///    bounce-back on contested cells and swaps, kicks when allowed;
/// 3. kicked bombs slide one cell;
/// 4. bombs at fuse zero (or resting on a flame) explode, chaining through
///    every bomb reached by a new flame;
/// 5. burnt wood reveals its item, agents on flames die, survivors pick up
///    items under them;
/// 6. the step counter advances.
///
/// Actions of dead agents are ignored.
pub fn step(state: &GameState, actions: &[Action; NUM_AGENTS]) -> Result<GameState, StepError> {
    if state.is_terminal() {
        return Err(StepError::Terminal {
            step_count: state.step_count,
            alive: state.alive_count(),
        });
    }
    let mut s = state.clone();

    // 1
    for f in &mut s.flames {
        f.ttl -= 1;
    }
    s.flames.retain(|f| f.ttl > 0);
    for b in &mut s.bombs {
        b.countdown = b.countdown.saturating_sub(1);
    }

    // 2
    place_bombs(&mut s, actions);
    move_agents(&mut s, actions);

    // 3
    slide_bombs(&mut s);

    // 4 + 5
    explode(&mut s);
    resolve_agents(&mut s);

    // 6
    s.step_count += 1;
    for a in &mut s.agents {
        if !a.alive && a.death_step.is_none() {
            a.death_step = Some(s.step_count);
        }
    }
    Ok(s)
}

fn place_bombs(s: &mut GameState, actions: &[Action; NUM_AGENTS]) {
    for id in 0..NUM_AGENTS {
        let agent = s.agents[id];
        if !agent.alive || actions[id] != Action::PlaceBomb {
            continue;
        }
        if agent.ammo == 0 || s.bomb_at(agent.pos).is_some() {
            continue;
        }
        s.insert_bomb(Bomb {
            pos: agent.pos,
            owner: id,
            countdown: BOMB_FUSE,
            blast_strength: agent.blast_strength,
            moving_dir: None,
        });
        s.agents[id].ammo -= 1;
    }
}

/// A bomb may be pushed into `pos` only when nothing occupies it.
fn free_for_bomb(s: &GameState, pos: Position) -> bool {
    s.cell(pos).walkable() && s.bomb_at(pos).is_none() && s.agent_at(pos).is_none()
}

fn move_agents(s: &mut GameState, actions: &[Action; NUM_AGENTS]) {
    let origin: [Position; NUM_AGENTS] = s.agents.map(|a| a.pos);
    let alive: [bool; NUM_AGENTS] = s.agents.map(|a| a.alive);
    let mut target = origin;
    let mut kick: [Option<Direction>; NUM_AGENTS] = [None; NUM_AGENTS];

    for id in 0..NUM_AGENTS {
        if !alive[id] {
            continue;
        }
        let Some(dir) = actions[id].direction() else {
            continue;
        };
        let Some(next) = origin[id].offset(dir) else {
            continue;
        };
        if !s.cell(next).walkable() {
            continue;
        }
        if s.bomb_at(next).is_some() {
            let pushable = s.agents[id].can_kick
                && next.offset(dir).is_some_and(|beyond| free_for_bomb(s, beyond));
            if !pushable {
                continue;
            }
            kick[id] = Some(dir);
        }
        target[id] = next;
    }

    // Bouncing only ever reverts an agent to its origin, so this settles.
    loop {
        let mut bounce = [false; NUM_AGENTS];
        for i in 0..NUM_AGENTS {
            if !alive[i] || target[i] == origin[i] {
                continue;
            }
            for j in 0..NUM_AGENTS {
                if i == j || !alive[j] {
                    continue;
                }
                let contested = target[j] == target[i];
                let swap = target[i] == origin[j] && target[j] == origin[i];
                if contested || swap {
                    bounce[i] = true;
                    if target[j] != origin[j] {
                        bounce[j] = true;
                    }
                }
            }
        }
        if !bounce.contains(&true) {
            break;
        }
        for id in 0..NUM_AGENTS {
            if bounce[id] {
                target[id] = origin[id];
                kick[id] = None;
            }
        }
    }

    for id in 0..NUM_AGENTS {
        if !alive[id] {
            continue;
        }
        s.agents[id].pos = target[id];
        if let Some(dir) = kick[id] {
            if let Some(b) = s.bombs.iter_mut().find(|b| b.pos == target[id]) {
                b.moving_dir = Some(dir);
            }
        }
    }
}

fn slide_bombs(s: &mut GameState) {
    if s.bombs.iter().all(|b| b.moving_dir.is_none()) {
        return;
    }
    for i in 0..s.bombs.len() {
        let Some(dir) = s.bombs[i].moving_dir else {
            continue;
        };
        let next = s.bombs[i].pos.offset(dir);
        match next {
            Some(p) if free_for_bomb(s, p) => s.bombs[i].pos = p,
            _ => s.bombs[i].moving_dir = None,
        }
    }
    s.bombs.sort_by_key(|b| b.pos);
}

/// Cells reached by a bomb's flame cross on `grid`: the bomb cell plus up to
/// `blast_strength - 1` cells per arm. Rigid cells stop an arm before
/// themselves; wood and item cells stop it on themselves.
pub(crate) fn flame_cross(
    grid: &super::Grid,
    pos: Position,
    blast_strength: u8,
    mut visit: impl FnMut(Position, CellKind),
) {
    visit(pos, grid[pos.row as usize][pos.col as usize]);
    for dir in Direction::ALL {
        let mut p = pos;
        for _ in 1..blast_strength {
            let Some(next) = p.offset(dir) else { break };
            let kind = grid[next.row as usize][next.col as usize];
            if kind == CellKind::Rigid {
                break;
            }
            visit(next, kind);
            if kind != CellKind::Passage {
                break;
            }
            p = next;
        }
    }
}

fn explode(s: &mut GameState) {
    let n = s.bombs.len();
    if n == 0 {
        return;
    }
    let mut bomb_at = [usize::MAX; BOARD_SIZE * BOARD_SIZE];
    for (i, b) in s.bombs.iter().enumerate() {
        bomb_at[b.pos.index()] = i;
    }
    let mut exploding = vec![false; n];
    let mut queue = Vec::new();
    for (i, b) in s.bombs.iter().enumerate() {
        if b.countdown == 0 || s.flame_at(b.pos).is_some() {
            exploding[i] = true;
            queue.push(i);
        }
    }
    if queue.is_empty() {
        return;
    }

    let mut covered = [false; BOARD_SIZE * BOARD_SIZE];
    let mut burnt = [false; BOARD_SIZE * BOARD_SIZE];
    while let Some(i) = queue.pop() {
        let b = s.bombs[i];
        flame_cross(&s.grid, b.pos, b.blast_strength, |p, kind| {
            covered[p.index()] = true;
            if kind != CellKind::Passage {
                burnt[p.index()] = true;
            }
            let j = bomb_at[p.index()];
            if j != usize::MAX && !exploding[j] {
                exploding[j] = true;
                queue.push(j);
            }
        });
    }

    for (i, b) in s.bombs.iter().enumerate() {
        if exploding[i] {
            let owner = &mut s.agents[b.owner];
            owner.ammo = (owner.ammo + 1).min(owner.max_bombs);
        }
    }
    let mut i = 0;
    s.bombs.retain(|_| {
        let keep = !exploding[i];
        i += 1;
        keep
    });

    for idx in 0..BOARD_SIZE * BOARD_SIZE {
        let pos = Position::from_index(idx);
        if burnt[idx] {
            let revealed = match s.cell(pos) {
                CellKind::Wood => {
                    let item = s.hidden_item(pos);
                    s.hidden_items[pos.row as usize][pos.col as usize] = None;
                    item.map_or(CellKind::Passage, Item::cell)
                }
                _ => CellKind::Passage,
            };
            s.set_cell(pos, revealed);
        }
        if covered[idx] {
            s.insert_flame(Flame {
                pos,
                ttl: FLAME_TTL,
            });
        }
    }
}

fn resolve_agents(s: &mut GameState) {
    for id in 0..NUM_AGENTS {
        if !s.agents[id].alive {
            continue;
        }
        let pos = s.agents[id].pos;
        if s.flame_at(pos).is_some() {
            s.agents[id].alive = false;
            continue;
        }
        if let Some(item) = s.cell(pos).item() {
            pickup(s, id, item);
            s.set_cell(pos, CellKind::Passage);
        }
    }
}

fn pickup(s: &mut GameState, id: AgentId, item: Item) {
    let a = &mut s.agents[id];
    match item {
        Item::ExtraBomb => {
            a.max_bombs = a.max_bombs.saturating_add(1);
            a.ammo = a.ammo.saturating_add(1);
        }
        Item::IncrRange => a.blast_strength = a.blast_strength.saturating_add(1),
        Item::Kick => a.can_kick = true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{agent_result, AgentOutcome, START_POSITIONS};

    const IDLE: [Action; 4] = [Action::Idle; 4];

    fn bomb(row: u8, col: u8, owner: AgentId, countdown: u8) -> Bomb {
        Bomb {
            pos: Position::new(row, col),
            owner,
            countdown,
            blast_strength: 2,
            moving_dir: None,
        }
    }

    #[test]
    fn idle_keeps_positions() {
        let s = GameState::empty();
        let next = step(&s, &IDLE).unwrap();
        assert_eq!(next.step_count, 1);
        for id in 0..4 {
            assert_eq!(next.agents[id].pos, START_POSITIONS[id]);
        }
        assert_eq!(s.step_count, 0, "input must not change");
    }

    #[test]
    fn place_bomb() {
        let s = GameState::empty();
        let mut acts = IDLE;
        acts[0] = Action::PlaceBomb;
        let next = step(&s, &acts).unwrap();
        let b = next.bomb_at(Position::new(1, 1)).expect("bomb placed");
        assert_eq!(b.countdown, BOMB_FUSE);
        assert_eq!(b.owner, 0);
        assert_eq!(next.agents[0].ammo, 0);
        // no ammo left: second placement does nothing
        let again = step(&next, &acts).unwrap();
        assert_eq!(again.bombs.len(), 1);
        assert_eq!(again.bombs[0].countdown, BOMB_FUSE - 1);
    }

    #[test]
    fn adjacent_bombs_chain() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(0, 0);
        s.insert_bomb(bomb(5, 4, 1, 1));
        s.insert_bomb(bomb(5, 5, 2, 9));
        s.agents[1].ammo = 0;
        s.agents[2].ammo = 0;
        let next = step(&s, &IDLE).unwrap();
        assert!(next.bombs.is_empty(), "both bombs explode");
        let mut flames: Vec<_> = next.flames.iter().map(|f| (f.pos.row, f.pos.col)).collect();
        flames.sort();
        let mut expected = vec![
            (5, 4),
            (4, 4),
            (6, 4),
            (5, 3),
            (5, 5),
            (4, 5),
            (6, 5),
            (5, 6),
        ];
        expected.sort();
        assert_eq!(flames, expected);
        assert!(next.flames.iter().all(|f| f.ttl == FLAME_TTL));
        assert_eq!(next.agents[1].ammo, 1);
        assert_eq!(next.agents[2].ammo, 1);
    }

    #[test]
    fn bombs_two_apart_do_not_chain_at_strength_two() {
        let mut s = GameState::empty();
        s.insert_bomb(bomb(5, 3, 1, 1));
        s.insert_bomb(bomb(5, 5, 2, 9));
        s.agents[1].ammo = 0;
        s.agents[2].ammo = 0;
        let next = step(&s, &IDLE).unwrap();
        assert_eq!(next.bombs.len(), 1);
        assert_eq!(next.bombs[0].pos, Position::new(5, 5));
        assert!(next.flame_at(Position::new(5, 4)).is_some());
        assert!(next.flame_at(Position::new(5, 5)).is_none());
    }

    #[test]
    fn bombs_two_apart_chain_with_longer_reach() {
        let mut s = GameState::empty();
        let mut a = bomb(5, 3, 1, 1);
        a.blast_strength = 3;
        s.insert_bomb(a);
        s.insert_bomb(bomb(5, 5, 2, 9));
        s.agents[1].ammo = 0;
        s.agents[2].ammo = 0;
        let next = step(&s, &IDLE).unwrap();
        assert!(next.bombs.is_empty());
        for c in [1, 2, 3, 4, 5, 6] {
            assert!(next.flame_at(Position::new(5, c)).is_some(), "col {c}");
        }
    }

    #[test]
    fn contested_cell_bounces_both() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(5, 4);
        s.agents[1].pos = Position::new(5, 6);
        let mut acts = IDLE;
        acts[0] = Action::Right;
        acts[1] = Action::Left;
        let next = step(&s, &acts).unwrap();
        assert_eq!(next.agents[0].pos, Position::new(5, 4));
        assert_eq!(next.agents[1].pos, Position::new(5, 6));
    }

    #[test]
    fn swap_bounces_both() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(5, 4);
        s.agents[1].pos = Position::new(5, 5);
        let mut acts = IDLE;
        acts[0] = Action::Right;
        acts[1] = Action::Left;
        let next = step(&s, &acts).unwrap();
        assert_eq!(next.agents[0].pos, Position::new(5, 4));
        assert_eq!(next.agents[1].pos, Position::new(5, 5));
    }

    #[test]
    fn following_a_moving_agent_is_allowed_and_bounces_cascade() {
        let mut s = GameState::empty();
        s.agents[0].pos = Position::new(5, 3);
        s.agents[1].pos = Position::new(5, 4);
        let mut acts = IDLE;
        acts[0] = Action::Right;
        acts[1] = Action::Right;
        let next = step(&s, &acts).unwrap();
        assert_eq!(next.agents[0].pos, Position::new(5, 4));
        assert_eq!(next.agents[1].pos, Position::new(5, 5));

        // leader blocked by a wall: the follower bounces too
        s.set_cell(Position::new(5, 5), CellKind::Rigid);
        let next = step(&s, &acts).unwrap();
        assert_eq!(next.agents[0].pos, Position::new(5, 3));
        assert_eq!(next.agents[1].pos, Position::new(5, 4));
    }

    #[test]
    fn walls_and_bombs_block() {
        let mut s = GameState::empty();
        s.set_cell(Position::new(1, 2), CellKind::Wood);
        s.set_cell(Position::new(2, 1), CellKind::Rigid);
        let mut acts = IDLE;
        acts[0] = Action::Right;
        let next = step(&s, &acts).unwrap();
        assert_eq!(next.agents[0].pos, Position::new(1, 1));
        acts[0] = Action::Down;
        assert_eq!(step(&s, &acts).unwrap().agents[0].pos, Position::new(1, 1));
        acts[0] = Action::Up;
        assert_eq!(step(&s, &acts).unwrap().agents[0].pos, Position::new(0, 1));

        let mut s = GameState::empty();
        s.insert_bomb(bomb(1, 2, 3, 8));
        s.agents[3].ammo = 0;
        acts[0] = Action::Right;
        assert_eq!(step(&s, &acts).unwrap().agents[0].pos, Position::new(1, 1));
    }

    #[test]
    fn kick_pushes_bomb() {
        let mut s = GameState::empty();
        s.agents[0].can_kick = true;
        s.insert_bomb(bomb(1, 2, 3, 8));
        s.agents[3].ammo = 0;
        let mut acts = IDLE;
        acts[0] = Action::Right;
        let next = step(&s, &acts).unwrap();
        assert_eq!(next.agents[0].pos, Position::new(1, 2));
        assert_eq!(next.bombs[0].pos, Position::new(1, 3));
        assert_eq!(next.bombs[0].moving_dir, Some(Direction::Right));
        let next = step(&next, &IDLE).unwrap();
        assert_eq!(next.bombs[0].pos, Position::new(1, 4));
    }

    #[test]
    fn kicked_bomb_stops_at_wall() {
        let mut s = GameState::empty();
        s.agents[0].can_kick = true;
        s.insert_bomb(bomb(1, 2, 3, 8));
        s.agents[3].ammo = 0;
        s.set_cell(Position::new(1, 4), CellKind::Rigid);
        let mut acts = IDLE;
        acts[0] = Action::Right;
        let next = step(&s, &acts).unwrap();
        let next = step(&next, &IDLE).unwrap();
        assert_eq!(next.bombs[0].pos, Position::new(1, 3));
        assert_eq!(next.bombs[0].moving_dir, None);
    }

    #[test]
    fn flame_stops_on_wood_and_reveals_item() {
        let mut s = GameState::empty();
        s.set_cell(Position::new(5, 6), CellKind::Wood);
        s.hidden_items[5][6] = Some(Item::Kick);
        s.set_cell(Position::new(4, 5), CellKind::Rigid);
        let mut b = bomb(5, 5, 0, 1);
        b.blast_strength = 4;
        s.insert_bomb(b);
        s.agents[0].ammo = 0;
        let next = step(&s, &IDLE).unwrap();
        assert_eq!(next.cell(Position::new(5, 6)), CellKind::ItemKick);
        assert!(next.hidden_item(Position::new(5, 6)).is_none());
        assert!(next.flame_at(Position::new(5, 6)).is_some());
        assert!(next.flame_at(Position::new(5, 7)).is_none());
        assert!(next.flame_at(Position::new(4, 5)).is_none());
        assert_eq!(next.cell(Position::new(4, 5)), CellKind::Rigid);
        assert!(next.flame_at(Position::new(5, 2)).is_some());
        assert!(next.flame_at(Position::new(5, 1)).is_none());
    }

    #[test]
    fn agents_in_flames_die_and_items_get_picked_up() {
        let mut s = GameState::empty();
        s.agents[1].pos = Position::new(5, 4);
        s.insert_bomb(bomb(5, 5, 0, 1));
        s.agents[0].ammo = 0;
        s.set_cell(Position::new(1, 2), CellKind::ItemExtraBomb);
        let mut acts = IDLE;
        acts[0] = Action::Right;
        let next = step(&s, &acts).unwrap();
        assert!(!next.agents[1].alive);
        assert_eq!(next.agents[1].death_step, Some(1));
        assert_eq!(agent_result(&next, 1), AgentOutcome::Loss);
        assert_eq!(next.agents[0].pos, Position::new(1, 2));
        assert_eq!(next.agents[0].max_bombs, 2);
        assert_eq!(next.agents[0].ammo, 2);
        assert_eq!(next.cell(Position::new(1, 2)), CellKind::Passage);
    }

    #[test]
    fn walking_into_a_fresh_flame_kills_but_a_dying_one_does_not() {
        let mut s = GameState::empty();
        s.insert_flame(Flame {
            pos: Position::new(1, 2),
            ttl: 2,
        });
        s.insert_flame(Flame {
            pos: Position::new(9, 2),
            ttl: 1,
        });
        let mut acts = IDLE;
        acts[0] = Action::Right;
        acts[1] = Action::Right;
        let next = step(&s, &acts).unwrap();
        assert!(!next.agents[0].alive);
        assert!(next.agents[1].alive);
        assert_eq!(next.agents[1].pos, Position::new(9, 2));
    }

    #[test]
    fn flame_lifetime_is_two_steps() {
        let mut s = GameState::empty();
        s.insert_bomb(bomb(5, 5, 0, 1));
        s.agents[0].ammo = 0;
        let s1 = step(&s, &IDLE).unwrap();
        assert!(s1.flame_at(Position::new(5, 5)).is_some());
        let s2 = step(&s1, &IDLE).unwrap();
        assert!(s2.flame_at(Position::new(5, 5)).is_some());
        let s3 = step(&s2, &IDLE).unwrap();
        assert!(s3.flame_at(Position::new(5, 5)).is_none());
    }

    #[test]
    fn fuse_is_ten_steps() {
        let s = GameState::empty();
        let mut acts = IDLE;
        acts[0] = Action::PlaceBomb;
        let mut cur = step(&s, &acts).unwrap();
        // walk away: down twice, right twice
        let plan = [Action::Down, Action::Down, Action::Right, Action::Right];
        for t in 1..=10 {
            assert_eq!(cur.bombs.len(), 1, "bomb alive before tick {t}");
            let mut a = IDLE;
            a[0] = *plan.get(t - 1).unwrap_or(&Action::Idle);
            cur = step(&cur, &a).unwrap();
        }
        assert!(cur.bombs.is_empty());
        assert!(cur.flame_at(Position::new(1, 1)).is_some());
        assert!(cur.agents[0].alive);
        assert_eq!(cur.agents[0].ammo, 1);
    }

    #[test]
    fn stepping_terminal_is_an_error() {
        let mut s = GameState::empty();
        s.step_count = 800;
        assert!(matches!(step(&s, &IDLE), Err(StepError::Terminal { .. })));
        let mut s = GameState::empty();
        for id in 1..4 {
            s.agents[id].alive = false;
        }
        assert!(step(&s, &IDLE).is_err());
    }

    #[test]
    fn dead_agents_actions_ignored() {
        let mut s = GameState::empty();
        s.agents[2].alive = false;
        s.agents[2].death_step = Some(0);
        let mut acts = IDLE;
        acts[2] = Action::PlaceBomb;
        let next = step(&s, &acts).unwrap();
        assert!(next.bombs.is_empty());
    }
}
