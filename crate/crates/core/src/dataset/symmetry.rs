use crate::engine::{Action, Direction, GameState, ObservationPlanes, Position, BOARD_SIZE, NUM_ACTIONS, NUM_PLANES};

const LAST: u8 = (BOARD_SIZE - 1) as u8;

/// Element of the dihedral group of the square board: an optional mirror
/// (`col -> 10 - col`) followed by `rotations` quarter turns clockwise
/// (`(row, col) -> (col, 10 - row)`).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symmetry {
    pub mirror: bool,
    pub rotations: u8,
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry {
        mirror: false,
        rotations: 0,
    };

    pub const ALL: [Symmetry; 8] = [
        Symmetry { mirror: false, rotations: 0 },
        Symmetry { mirror: false, rotations: 1 },
        Symmetry { mirror: false, rotations: 2 },
        Symmetry { mirror: false, rotations: 3 },
        Symmetry { mirror: true, rotations: 0 },
        Symmetry { mirror: true, rotations: 1 },
        Symmetry { mirror: true, rotations: 2 },
        Symmetry { mirror: true, rotations: 3 },
    ];

    pub fn rotation(quarter_turns: u8) -> Self {
        Self {
            mirror: false,
            rotations: quarter_turns % 4,
        }
    }

    pub fn apply_pos(self, p: Position) -> Position {
        let (mut r, mut c) = (p.row, p.col);
        if self.mirror {
            c = LAST - c;
        }
        for _ in 0..self.rotations {
            (r, c) = (c, LAST - r);
        }
        Position::new(r, c)
    }

    /// Up -> Right -> Down -> Left per clockwise quarter turn; the mirror
    /// swaps Left and Right.
    pub fn apply_dir(self, d: Direction) -> Direction {
        let mut d = d;
        if self.mirror {
            d = match d {
                Direction::Left => Direction::Right,
                Direction::Right => Direction::Left,
                other => other,
            };
        }
        for _ in 0..self.rotations {
            d = match d {
                Direction::Up => Direction::Right,
                Direction::Right => Direction::Down,
                Direction::Down => Direction::Left,
                Direction::Left => Direction::Up,
            };
        }
        d
    }

    /// Idle and PlaceBomb are fixed points.
    pub fn apply_action(self, a: Action) -> Action {
        a.direction().map_or(a, |d| self.apply_dir(d).action())
    }

    /// `self` followed by `other`.
    pub fn then(self, other: Symmetry) -> Symmetry {
        // two cells whose images identify a group element
        let probes = [Position::new(0, 1), Position::new(2, 0)];
        *Symmetry::ALL
            .iter()
            .find(|g| probes.iter().all(|&p| g.apply_pos(p) == other.apply_pos(self.apply_pos(p))))
            .expect("the group is closed")
    }

    pub fn inverse(self) -> Symmetry {
        *Symmetry::ALL
            .iter()
            .find(|g| self.then(**g) == Symmetry::IDENTITY)
            .expect("every element has an inverse")
    }

    /// Moves every spatial plane; planes that hold one value everywhere are
    /// copied unchanged.
    pub fn apply_obs(self, obs: &ObservationPlanes) -> ObservationPlanes {
        let mut out = ObservationPlanes::zeros();
        let map: Vec<usize> = (0..BOARD_SIZE * BOARD_SIZE)
            .map(|i| self.apply_pos(Position::from_index(i)).index())
            .collect();
        for plane in 0..NUM_PLANES {
            let src = obs.plane(plane);
            let dst = &mut out.as_mut_slice()[plane * map.len()..(plane + 1) * map.len()];
            if crate::engine::plane::BROADCAST.contains(&plane) {
                dst.copy_from_slice(src);
            } else {
                for (i, &v) in src.iter().enumerate() {
                    dst[map[i]] = v;
                }
            }
        }
        out
    }

    /// `out[g(a)] = pi[a]`.
    pub fn apply_policy(self, pi: &[f32; NUM_ACTIONS]) -> [f32; NUM_ACTIONS] {
        let mut out = [0.0; NUM_ACTIONS];
        for a in Action::ALL {
            out[self.apply_action(a).index()] = pi[a.index()];
        }
        out
    }

    /// Moves the whole world state. Agent ids keep their identity.
    pub fn apply_state(self, s: &GameState) -> GameState {
        let mut out = s.clone();
        for i in 0..BOARD_SIZE * BOARD_SIZE {
            let p = Position::from_index(i);
            let q = self.apply_pos(p);
            out.set_cell(q, s.cell(p));
            out.hidden_items[q.row as usize][q.col as usize] = s.hidden_item(p);
        }
        for b in &mut out.bombs {
            b.pos = self.apply_pos(b.pos);
            b.moving_dir = b.moving_dir.map(|d| self.apply_dir(d));
        }
        out.bombs.sort_by_key(|b| b.pos);
        for f in &mut out.flames {
            f.pos = self.apply_pos(f.pos);
        }
        out.flames.sort_by_key(|f| f.pos);
        for a in &mut out.agents {
            a.pos = self.apply_pos(a.pos);
        }
        out
    }
}
