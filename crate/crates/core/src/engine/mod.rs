//! Deterministic four-player free-for-all bomber simulation.
//!
//! A [`GameState`] is a plain value. Every operation in this module is a pure
//! function of its inputs, so states can be cloned into search trees and
//! shared between threads freely.

mod blast;
mod board;
mod hash;
mod invariants;
mod observe;
pub mod replay;
mod step;

pub use blast::{blast_map, BlastMap};
pub use board::{generate_board, ring_cells, BoardParams};
pub use hash::{canonical_bytes, state_hash};
pub use invariants::{check_state, check_transition};
pub use observe::{encode_observation, plane, ObservationPlanes, NUM_PLANES, OBS_LEN, PLANE_LEN};
pub use step::{step, StepError};
pub(crate) use hash::fmix64;

use std::fmt;

pub const BOARD_SIZE: usize = 11;
pub const NUM_AGENTS: usize = 4;
pub const NUM_ACTIONS: usize = 6;
pub const MAX_STEPS: u16 = 800;
pub const BOMB_FUSE: u8 = 10;
pub const FLAME_TTL: u8 = 2;
pub const INITIAL_BLAST_STRENGTH: u8 = 2;
pub const INITIAL_MAX_BOMBS: u8 = 1;

/// Start cells, indexed by agent id.
pub const START_POSITIONS: [Position; NUM_AGENTS] = [
    Position::new(1, 1),
    Position::new(9, 1),
    Position::new(9, 9),
    Position::new(1, 9),
];

pub type AgentId = usize;

/// A cell on the 11x11 board.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub row: u8,
    pub col: u8,
}

impl Position {
    pub const fn new(row: u8, col: u8) -> Self {
        assert!((row as usize) < BOARD_SIZE && (col as usize) < BOARD_SIZE);
        Self { row, col }
    }

    /// Builds a position from signed coordinates, `None` when off the board.
    pub fn checked(row: i32, col: i32) -> Option<Self> {
        let n = BOARD_SIZE as i32;
        if (0..n).contains(&row) && (0..n).contains(&col) {
            Some(Self {
                row: row as u8,
                col: col as u8,
            })
        } else {
            None
        }
    }

    pub fn index(self) -> usize {
        self.row as usize * BOARD_SIZE + self.col as usize
    }

    pub fn from_index(idx: usize) -> Self {
        Self::new((idx / BOARD_SIZE) as u8, (idx % BOARD_SIZE) as u8)
    }

    pub fn offset(self, dir: Direction) -> Option<Self> {
        let (dr, dc) = dir.delta();
        Self::checked(self.row as i32 + dr, self.col as i32 + dc)
    }

    pub fn manhattan(self, other: Position) -> u32 {
        (self.row as i32 - other.row as i32).unsigned_abs()
            + (self.col as i32 - other.col as i32).unsigned_abs()
    }

    pub fn neighbors(self) -> impl Iterator<Item = Position> {
        Direction::ALL.into_iter().filter_map(move |d| self.offset(d))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    /// (row, col) delta.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn from_delta(dr: i32, dc: i32) -> Option<Self> {
        match (dr, dc) {
            (-1, 0) => Some(Direction::Up),
            (1, 0) => Some(Direction::Down),
            (0, -1) => Some(Direction::Left),
            (0, 1) => Some(Direction::Right),
            _ => None,
        }
    }

    pub fn action(self) -> Action {
        match self {
            Direction::Up => Action::Up,
            Direction::Down => Action::Down,
            Direction::Left => Action::Left,
            Direction::Right => Action::Right,
        }
    }

    fn code(self) -> u8 {
        self.action() as u8
    }
}

#[repr(u8)]
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Idle = 0,
    Up = 1,
    Down = 2,
    Left = 3,
    Right = 4,
    PlaceBomb = 5,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::Idle,
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::PlaceBomb,
    ];

    pub fn from_index(idx: usize) -> Option<Action> {
        Self::ALL.get(idx).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Up => Some(Direction::Up),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
            Action::Right => Some(Direction::Right),
            Action::Idle | Action::PlaceBomb => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Idle => "idle",
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::PlaceBomb => "bomb",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        let s = s.trim().to_ascii_lowercase();
        if let Ok(idx) = s.parse::<usize>() {
            return Self::from_index(idx);
        }
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s || (s == "placebomb" && *a == Action::PlaceBomb))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    ExtraBomb,
    IncrRange,
    Kick,
}

impl Item {
    pub const ALL: [Item; 3] = [Item::ExtraBomb, Item::IncrRange, Item::Kick];

    pub fn cell(self) -> CellKind {
        match self {
            Item::ExtraBomb => CellKind::ItemExtraBomb,
            Item::IncrRange => CellKind::ItemIncrRange,
            Item::Kick => CellKind::ItemKick,
        }
    }
}

/// Static content of a cell. Bombs, flames and agents overlay cells and are
/// tracked separately.
#[repr(u8)]
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum CellKind {
    #[default]
    Passage = 0,
    Rigid = 1,
    Wood = 2,
    ItemExtraBomb = 3,
    ItemIncrRange = 4,
    ItemKick = 5,
}

impl CellKind {
    pub fn item(self) -> Option<Item> {
        match self {
            CellKind::ItemExtraBomb => Some(Item::ExtraBomb),
            CellKind::ItemIncrRange => Some(Item::IncrRange),
            CellKind::ItemKick => Some(Item::Kick),
            _ => None,
        }
    }

    /// Agents may stand here.
    pub fn walkable(self) -> bool {
        !matches!(self, CellKind::Rigid | CellKind::Wood)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bomb {
    pub pos: Position,
    pub owner: AgentId,
    pub countdown: u8,
    pub blast_strength: u8,
    pub moving_dir: Option<Direction>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Flame {
    pub pos: Position,
    pub ttl: u8,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub pos: Position,
    pub alive: bool,
    pub ammo: u8,
    pub max_bombs: u8,
    pub blast_strength: u8,
    pub can_kick: bool,
    /// Value of `step_count` in the first state where the agent is dead.
    pub death_step: Option<u16>,
}

impl AgentState {
    pub fn spawn(pos: Position) -> Self {
        Self {
            pos,
            alive: true,
            ammo: INITIAL_MAX_BOMBS,
            max_bombs: INITIAL_MAX_BOMBS,
            blast_strength: INITIAL_BLAST_STRENGTH,
            can_kick: false,
            death_step: None,
        }
    }
}

/// Outcome of one agent in a state.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum AgentOutcome {
    Ongoing,
    Win,
    Draw,
    Loss,
}

impl AgentOutcome {
    /// Numeric value used as a learning target: win 1, draw 0, loss -1.
    /// `None` while the episode is still running for the agent.
    pub fn value(self) -> Option<f32> {
        match self {
            AgentOutcome::Ongoing => None,
            AgentOutcome::Win => Some(1.0),
            AgentOutcome::Draw => Some(0.0),
            AgentOutcome::Loss => Some(-1.0),
        }
    }
}

pub type Grid = [[CellKind; BOARD_SIZE]; BOARD_SIZE];

/// Complete world state of one episode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameState {
    pub grid: Grid,
    /// Kept sorted by position.
    pub bombs: Vec<Bomb>,
    /// Kept sorted by position, at most one flame per cell.
    pub flames: Vec<Flame>,
    pub agents: [AgentState; NUM_AGENTS],
    pub step_count: u16,
    /// Item buried under a wood cell, revealed when the wood burns.
    pub hidden_items: [[Option<Item>; BOARD_SIZE]; BOARD_SIZE],
}

impl GameState {
    /// Open board with the four agents on their start cells and nothing else.
    pub fn empty() -> Self {
        Self {
            grid: [[CellKind::Passage; BOARD_SIZE]; BOARD_SIZE],
            bombs: Vec::new(),
            flames: Vec::new(),
            agents: START_POSITIONS.map(AgentState::spawn),
            step_count: 0,
            hidden_items: [[None; BOARD_SIZE]; BOARD_SIZE],
        }
    }

    pub fn cell(&self, pos: Position) -> CellKind {
        self.grid[pos.row as usize][pos.col as usize]
    }

    pub fn set_cell(&mut self, pos: Position, kind: CellKind) {
        self.grid[pos.row as usize][pos.col as usize] = kind;
    }

    pub fn hidden_item(&self, pos: Position) -> Option<Item> {
        self.hidden_items[pos.row as usize][pos.col as usize]
    }

    pub fn bomb_at(&self, pos: Position) -> Option<&Bomb> {
        self.bombs.iter().find(|b| b.pos == pos)
    }

    pub fn flame_at(&self, pos: Position) -> Option<&Flame> {
        self.flames.iter().find(|f| f.pos == pos)
    }

    pub fn agent_at(&self, pos: Position) -> Option<AgentId> {
        self.agents.iter().position(|a| a.alive && a.pos == pos)
    }

    pub fn alive_count(&self) -> usize {
        self.agents.iter().filter(|a| a.alive).count()
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..NUM_AGENTS).filter(|&i| self.agents[i].alive)
    }

    pub fn is_terminal(&self) -> bool {
        self.alive_count() <= 1 || self.step_count >= MAX_STEPS
    }

    /// Adds a bomb keeping the canonical (row, col) order. Replaces nothing:
    /// callers guarantee the cell is free of bombs.
    pub fn insert_bomb(&mut self, bomb: Bomb) {
        debug_assert!(self.bomb_at(bomb.pos).is_none());
        let at = self.bombs.partition_point(|b| b.pos < bomb.pos);
        self.bombs.insert(at, bomb);
    }

    /// Sets a flame on a cell, keeping the longer lifetime if one exists.
    pub fn insert_flame(&mut self, flame: Flame) {
        match self.flames.binary_search_by(|f| f.pos.cmp(&flame.pos)) {
            Ok(i) => self.flames[i].ttl = self.flames[i].ttl.max(flame.ttl),
            Err(i) => self.flames.insert(i, flame),
        }
    }

    /// Bombs currently on the board owned by `agent`.
    pub fn live_bombs_of(&self, agent: AgentId) -> usize {
        self.bombs.iter().filter(|b| b.owner == agent).count()
    }

    /// Copy of the state with every still-buried item removed, i.e. the
    /// board as an agent observes it.
    pub fn without_hidden_items(&self) -> Self {
        let mut s = self.clone();
        s.hidden_items = [[None; BOARD_SIZE]; BOARD_SIZE];
        s
    }
}

/// Outcome of `agent` in `state`.
///
/// Dead agents lose. A unique survivor wins. When the last agents die in the
/// same step they draw, and every agent still alive at the step limit draws.
pub fn agent_result(state: &GameState, agent: AgentId) -> AgentOutcome {
    let me = &state.agents[agent];
    let alive = state.alive_count();
    if !state.is_terminal() {
        return if me.alive {
            AgentOutcome::Ongoing
        } else {
            AgentOutcome::Loss
        };
    }
    if me.alive {
        if alive == 1 {
            AgentOutcome::Win
        } else {
            AgentOutcome::Draw
        }
    } else if alive == 0 && me.death_step == Some(state.step_count) {
        // everyone left died together in the final step
        AgentOutcome::Draw
    } else {
        AgentOutcome::Loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_roundtrip_and_parse() {
        for a in Action::ALL {
            assert_eq!(Action::from_index(a.index()), Some(a));
            assert_eq!(Action::parse(a.name()), Some(a));
        }
        assert_eq!(Action::parse("PlaceBomb"), Some(Action::PlaceBomb));
        assert_eq!(Action::parse("5"), Some(Action::PlaceBomb));
        assert_eq!(Action::parse("jump"), None);
        assert_eq!(Action::ALL.len(), 6);
    }

    #[test]
    fn outcome_values_are_fixed() {
        assert_eq!(AgentOutcome::Win.value(), Some(1.0));
        assert_eq!(AgentOutcome::Draw.value(), Some(0.0));
        assert_eq!(AgentOutcome::Loss.value(), Some(-1.0));
        assert_eq!(AgentOutcome::Ongoing.value(), None);
    }

    fn kill(state: &mut GameState, id: AgentId, at: u16) {
        state.agents[id].alive = false;
        state.agents[id].death_step = Some(at);
    }

    #[test]
    fn result_non_terminal() {
        let mut s = GameState::empty();
        assert_eq!(agent_result(&s, 0), AgentOutcome::Ongoing);
        kill(&mut s, 2, 0);
        assert_eq!(agent_result(&s, 2), AgentOutcome::Loss);
        assert_eq!(agent_result(&s, 0), AgentOutcome::Ongoing);
    }

    #[test]
    fn result_unique_survivor() {
        let mut s = GameState::empty();
        s.step_count = 120;
        kill(&mut s, 1, 40);
        kill(&mut s, 2, 90);
        kill(&mut s, 3, 120);
        assert_eq!(agent_result(&s, 0), AgentOutcome::Win);
        for id in 1..4 {
            assert_eq!(agent_result(&s, id), AgentOutcome::Loss);
        }
    }

    #[test]
    fn result_step_limit() {
        let mut s = GameState::empty();
        s.step_count = MAX_STEPS;
        kill(&mut s, 1, 10);
        kill(&mut s, 3, 700);
        assert_eq!(agent_result(&s, 0), AgentOutcome::Draw);
        assert_eq!(agent_result(&s, 2), AgentOutcome::Draw);
        assert_eq!(agent_result(&s, 1), AgentOutcome::Loss);
        assert_eq!(agent_result(&s, 3), AgentOutcome::Loss);
    }

    #[test]
    fn result_simultaneous_last_deaths_draw() {
        let mut s = GameState::empty();
        s.step_count = 55;
        kill(&mut s, 0, 20);
        kill(&mut s, 1, 55);
        kill(&mut s, 2, 55);
        kill(&mut s, 3, 55);
        assert_eq!(agent_result(&s, 0), AgentOutcome::Loss);
        for id in 1..4 {
            assert_eq!(agent_result(&s, id), AgentOutcome::Draw);
        }
    }

    #[test]
    fn position_helpers() {
        let p = Position::new(0, 10);
        assert_eq!(p.offset(Direction::Up), None);
        assert_eq!(p.offset(Direction::Right), None);
        assert_eq!(p.offset(Direction::Down), Some(Position::new(1, 10)));
        assert_eq!(Position::from_index(p.index()), p);
        assert_eq!(Position::new(1, 1).manhattan(Position::new(9, 9)), 16);
        assert_eq!(Position::new(5, 5).neighbors().count(), 4);
        assert_eq!(Position::new(0, 0).neighbors().count(), 2);
    }
}
