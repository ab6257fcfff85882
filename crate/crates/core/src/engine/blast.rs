use super::step::flame_cross;
use super::{GameState, Position, BOARD_SIZE};

/// Per cell, the earliest number of ticks from now after which a flame
/// covers it if nobody acts. Offsets start at 1: the value describes the
/// state reached after that many `step` calls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlastMap {
    cells: [Option<u8>; BOARD_SIZE * BOARD_SIZE],
}

impl BlastMap {
    pub fn get(&self, pos: Position) -> Option<u8> {
        self.cells[pos.index()]
    }

    /// Covered within `ticks` steps.
    pub fn within(&self, pos: Position, ticks: u8) -> bool {
        self.get(pos).is_some_and(|t| t <= ticks)
    }

    pub fn is_clear(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    pub fn as_grid(&self) -> [[Option<u8>; BOARD_SIZE]; BOARD_SIZE] {
        let mut g = [[None; BOARD_SIZE]; BOARD_SIZE];
        for (i, v) in self.cells.iter().enumerate() {
            g[i / BOARD_SIZE][i % BOARD_SIZE] = *v;
        }
        g
    }
}

/// Danger analysis shared by the heuristic agent and the action filter.
///
/// Chains are resolved: a bomb caught in an earlier blast inherits that
/// blast's time. Arms are occluded by the current rigid and wood cells.
/// Flames that survive the next tick count as covering their cell at offset 1.
pub fn blast_map(state: &GameState, horizon: u8) -> BlastMap {
    let mut cells = [None; BOARD_SIZE * BOARD_SIZE];
    if horizon == 0 {
        return BlastMap { cells };
    }

    let bombs = &state.bombs;
    let mut bomb_at = [usize::MAX; BOARD_SIZE * BOARD_SIZE];
    let mut time: Vec<u8> = Vec::with_capacity(bombs.len());
    for (i, b) in bombs.iter().enumerate() {
        bomb_at[b.pos.index()] = i;
        let on_flame = state.flame_at(b.pos).is_some_and(|f| f.ttl >= 2);
        time.push(if on_flame { 1 } else { b.countdown.max(1) });
    }

    // Bellman-Ford style relaxation; bomb counts are tiny.
    let mut changed = !bombs.is_empty();
    while changed {
        changed = false;
        for i in 0..bombs.len() {
            let t = time[i];
            flame_cross(&state.grid, bombs[i].pos, bombs[i].blast_strength, |p, _| {
                let j = bomb_at[p.index()];
                if j != usize::MAX && time[j] > t {
                    time[j] = t;
                    changed = true;
                }
            });
        }
    }

    for (i, b) in bombs.iter().enumerate() {
        let t = time[i];
        if t > horizon {
            continue;
        }
        flame_cross(&state.grid, b.pos, b.blast_strength, |p, _| {
            let c = &mut cells[p.index()];
            *c = Some(c.map_or(t, |old| old.min(t)));
        });
    }
    for f in &state.flames {
        if f.ttl >= 2 {
            cells[f.pos.index()] = Some(1);
        }
    }
    BlastMap { cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{step, Action, Bomb, CellKind};

    fn bomb(row: u8, col: u8, countdown: u8) -> Bomb {
        Bomb {
            pos: Position::new(row, col),
            owner: 0,
            countdown,
            blast_strength: 2,
            moving_dir: None,
        }
    }

    #[test]
    fn empty_board_is_clear() {
        let s = GameState::empty();
        assert!(blast_map(&s, 10).is_clear());
    }

    #[test]
    fn single_bomb_cross() {
        let mut s = GameState::empty();
        s.insert_bomb(bomb(5, 5, 3));
        s.set_cell(Position::new(4, 5), CellKind::Rigid);
        let m = blast_map(&s, 10);
        let covered: Vec<_> = (0..121)
            .map(Position::from_index)
            .filter(|p| m.get(*p).is_some())
            .collect();
        assert_eq!(covered.len(), 4);
        for p in [(5, 5), (6, 5), (5, 4), (5, 6)] {
            assert_eq!(m.get(Position::new(p.0, p.1)), Some(3));
        }
        assert_eq!(m.get(Position::new(4, 5)), None, "behind rigid");
        assert_eq!(m.get(Position::new(3, 5)), None);
        assert!(blast_map(&s, 2).is_clear(), "outside horizon");
    }

    #[test]
    fn open_cross_has_five_cells() {
        let mut s = GameState::empty();
        s.insert_bomb(bomb(5, 5, 3));
        let m = blast_map(&s, 10);
        let n = (0..121).filter(|&i| m.get(Position::from_index(i)).is_some()).count();
        assert_eq!(n, 5);
    }

    #[test]
    fn chain_pulls_in_later_bomb() {
        let mut s = GameState::empty();
        s.insert_bomb(bomb(5, 5, 5));
        s.insert_bomb(bomb(5, 6, 2));
        let m = blast_map(&s, 10);
        assert_eq!(m.get(Position::new(5, 5)), Some(2));
        assert_eq!(m.get(Position::new(5, 6)), Some(2));
        assert_eq!(m.get(Position::new(5, 4)), Some(2));
        assert_eq!(m.get(Position::new(4, 5)), Some(2));
    }

    #[test]
    fn agrees_with_simulation() {
        let mut s = GameState::empty();
        s.insert_bomb(bomb(5, 5, 4));
        s.insert_bomb(bomb(5, 6, 7));
        s.insert_bomb(bomb(3, 3, 2));
        s.set_cell(Position::new(6, 6), CellKind::Wood);
        for a in &mut s.agents {
            a.ammo = 0;
            a.max_bombs = 0;
        }
        s.agents[0].max_bombs = 3;
        let m = blast_map(&s, 10);
        let mut cur = s.clone();
        let mut first = [None; 121];
        for t in 1..=10u8 {
            cur = step(&cur, &[Action::Idle; 4]).unwrap();
            for f in &cur.flames {
                if first[f.pos.index()].is_none() {
                    first[f.pos.index()] = Some(t);
                }
            }
        }
        for i in 0..121 {
            assert_eq!(m.get(Position::from_index(i)), first[i], "cell {i}");
        }
    }
}
