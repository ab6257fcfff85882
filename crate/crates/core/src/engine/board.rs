use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CellKind, GameState, Item, Position, BOARD_SIZE, START_POSITIONS};

/// Knobs of the board generator.
#[derive(Clone, Debug, PartialEq)]
pub struct BoardParams {
    pub rigid_target: usize,
    pub wood_target: usize,
    /// Fraction of wood cells hiding an item.
    pub item_fraction: f64,
}

impl Default for BoardParams {
    fn default() -> Self {
        Self {
            rigid_target: 36,
            wood_target: 36,
            item_fraction: 0.5,
        }
    }
}

/// Quarter turn clockwise about the board centre.
fn rotate(p: Position) -> Position {
    Position::new(p.col, (BOARD_SIZE - 1) as u8 - p.row)
}

fn orbit(p: Position) -> Vec<Position> {
    let mut out = vec![p];
    let mut q = rotate(p);
    while q != p {
        out.push(q);
        q = rotate(q);
    }
    out
}

/// Cells at distance one from the border: the loop through all four starts.
pub fn ring_cells() -> impl Iterator<Item = Position> {
    let lo = 1u8;
    let hi = (BOARD_SIZE - 2) as u8;
    (0..BOARD_SIZE * BOARD_SIZE)
        .map(Position::from_index)
        .filter(move |p| {
            (lo..=hi).contains(&p.row)
                && (lo..=hi).contains(&p.col)
                && (p.row == lo || p.row == hi || p.col == lo || p.col == hi)
        })
}

fn is_ring(p: Position) -> bool {
    let hi = (BOARD_SIZE - 2) as u8;
    (1..=hi).contains(&p.row) && (1..=hi).contains(&p.col) && (p.row == 1 || p.row == hi || p.col == 1 || p.col == hi)
}

/// Start cells plus their two neighbours along the ring.
fn is_cleared(p: Position) -> bool {
    orbit(p).into_iter().any(|q| {
        q == Position::new(1, 1) || q == Position::new(1, 2) || q == Position::new(2, 1)
    })
}

/// Random board with four-fold rotational symmetry, so that every start
/// corner sees the same surroundings.
pub fn generate_board(seed: u64) -> GameState {
    generate_board_with(seed, &BoardParams::default())
}

pub fn generate_board_with(seed: u64, params: &BoardParams) -> GameState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GameState::empty();

    let mut orbits: Vec<Vec<Position>> = (0..BOARD_SIZE * BOARD_SIZE)
        .map(Position::from_index)
        .filter(|&p| orbit(p).iter().all(|q| q.index() >= p.index()))
        .map(orbit)
        .filter(|o| !is_cleared(o[0]))
        .collect();
    orbits.shuffle(&mut rng);

    let mut rigid = 0;
    for o in &orbits {
        if is_ring(o[0]) || rigid + o.len() > params.rigid_target {
            continue;
        }
        rigid += o.len();
        for &p in o {
            state.set_cell(p, CellKind::Rigid);
        }
    }
    let mut wood = 0;
    for o in &orbits {
        if state.cell(o[0]) == CellKind::Rigid || wood + o.len() > params.wood_target {
            continue;
        }
        wood += o.len();
        for &p in o {
            state.set_cell(p, CellKind::Wood);
        }
    }

    repair_connectivity(&mut state);

    // repaired cells may have turned into wood as well
    let mut wood_orbits: Vec<Vec<Position>> = (0..BOARD_SIZE * BOARD_SIZE)
        .map(Position::from_index)
        .filter(|&p| state.cell(p) == CellKind::Wood)
        .filter(|&p| orbit(p).iter().all(|q| q.index() >= p.index()))
        .map(orbit)
        .collect();
    wood_orbits.shuffle(&mut rng);
    let with_items = (wood_orbits.len() as f64 * params.item_fraction).round() as usize;
    for o in wood_orbits.iter().take(with_items) {
        let item = Item::ALL[rng.gen_range(0..Item::ALL.len())];
        for &p in o {
            state.hidden_items[p.row as usize][p.col as usize] = Some(item);
        }
    }
    state
}

/// Cells reachable from `from` through passable or destructible cells.
pub(crate) fn reachable_through_wood(state: &GameState, from: Position) -> [bool; BOARD_SIZE * BOARD_SIZE] {
    let mut seen = [false; BOARD_SIZE * BOARD_SIZE];
    let mut stack = vec![from];
    seen[from.index()] = true;
    while let Some(p) = stack.pop() {
        for q in p.neighbors() {
            if !seen[q.index()] && state.cell(q) != CellKind::Rigid {
                seen[q.index()] = true;
                stack.push(q);
            }
        }
    }
    seen
}

/// Turns blocking rigid orbits into wood until all starts connect.
fn repair_connectivity(state: &mut GameState) {
    loop {
        let seen = reachable_through_wood(state, START_POSITIONS[0]);
        if START_POSITIONS.iter().all(|p| seen[p.index()]) {
            return;
        }
        let frontier = (0..BOARD_SIZE * BOARD_SIZE)
            .map(Position::from_index)
            .find(|&p| {
                state.cell(p) == CellKind::Rigid && p.neighbors().any(|q| seen[q.index()])
            })
            .expect("a disconnected board always has a rigid frontier");
        for p in orbit(frontier) {
            state.set_cell(p, CellKind::Wood);
        }
    }
}
