use super::{AgentId, CellKind, GameState, Item, BOARD_SIZE, MAX_STEPS, NUM_AGENTS};

pub const NUM_PLANES: usize = 23;
pub const PLANE_LEN: usize = BOARD_SIZE * BOARD_SIZE;
pub const OBS_LEN: usize = NUM_PLANES * PLANE_LEN;

pub mod plane {
    pub const RIGID: usize = 0;
    pub const WOOD: usize = 1;
    pub const BOMB: usize = 2;
    pub const BOMB_STRENGTH: usize = 3;
    pub const BOMB_COUNTDOWN: usize = 4;
    pub const FLAME: usize = 5;
    pub const ITEM_EXTRA_BOMB: usize = 6;
    pub const ITEM_INCR_RANGE: usize = 7;
    pub const ITEM_KICK: usize = 8;
    pub const SELF_POS: usize = 9;
    pub const OPPONENT_POS: usize = 10;
    pub const SELF_AMMO: usize = 13;
    pub const SELF_STRENGTH: usize = 14;
    pub const SELF_KICK: usize = 15;
    pub const SELF_MAX_BOMBS: usize = 16;
    pub const STEP: usize = 17;
    pub const OPPONENT_ALIVE: usize = 18;
    pub const ONE: usize = 21;
    pub const PASSAGE: usize = 22;

    /// Planes whose value is the same on every cell.
    pub const BROADCAST: std::ops::Range<usize> = 13..22;
}

/// 23x11x11 planes in channel-major, row-major order.
#[derive(Clone, PartialEq)]
pub struct ObservationPlanes {
    data: Box<[f32; OBS_LEN]>,
}

impl std::fmt::Debug for ObservationPlanes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObservationPlanes").finish_non_exhaustive()
    }
}

impl Default for ObservationPlanes {
    fn default() -> Self {
        Self::zeros()
    }
}

impl ObservationPlanes {
    pub fn zeros() -> Self {
        Self {
            data: Box::new([0.0; OBS_LEN]),
        }
    }

    pub fn from_slice(values: &[f32]) -> Option<Self> {
        let arr: [f32; OBS_LEN] = values.try_into().ok()?;
        Some(Self {
            data: Box::new(arr),
        })
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data[..]
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data[..]
    }

    pub fn get(&self, plane: usize, row: usize, col: usize) -> f32 {
        self.data[plane * PLANE_LEN + row * BOARD_SIZE + col]
    }

    pub fn set(&mut self, plane: usize, row: usize, col: usize, v: f32) {
        self.data[plane * PLANE_LEN + row * BOARD_SIZE + col] = v;
    }

    pub fn plane(&self, plane: usize) -> &[f32] {
        &self.data[plane * PLANE_LEN..(plane + 1) * PLANE_LEN]
    }

    fn fill(&mut self, plane: usize, v: f32) {
        self.data[plane * PLANE_LEN..(plane + 1) * PLANE_LEN].fill(v);
    }
}

/// Encodes what `agent` sees. Items still buried under wood are not
/// visible, so they are not encoded.
///
/// | plane | content |
/// |-------|---------|
/// | 0 | rigid |
/// | 1 | wood |
/// | 2 | bomb present |
/// | 3 | bomb blast strength / 11 |
/// | 4 | bomb countdown / 10 |
/// | 5 | flame ttl / 2 |
/// | 6-8 | revealed extra-bomb, range, kick items |
/// | 9 | own position |
/// | 10-12 | opponent positions, ascending id without self |
/// | 13 | own ammo / 10 |
/// | 14 | own blast strength / 11 |
/// | 15 | own kick ability |
/// | 16 | own bomb capacity / 10 |
/// | 17 | step / 800 |
/// | 18-20 | opponent alive flags, same order as 10-12 |
/// | 21 | constant one |
/// | 22 | passage |
///
/// Every value is clamped to [0, 1].
pub fn encode_observation(state: &GameState, agent: AgentId) -> ObservationPlanes {
    let mut obs = ObservationPlanes::zeros();
    encode_into(state, agent, &mut obs);
    obs
}

fn encode_into(state: &GameState, agent: AgentId, obs: &mut ObservationPlanes) {
    use plane::*;
    obs.as_mut_slice().fill(0.0);
    for r in 0..BOARD_SIZE {
        for c in 0..BOARD_SIZE {
            let p = match state.grid[r][c] {
                CellKind::Passage => PASSAGE,
                CellKind::Rigid => RIGID,
                CellKind::Wood => WOOD,
                CellKind::ItemExtraBomb => ITEM_EXTRA_BOMB,
                CellKind::ItemIncrRange => ITEM_INCR_RANGE,
                CellKind::ItemKick => ITEM_KICK,
            };
            obs.set(p, r, c, 1.0);
        }
    }
    debug_assert_eq!(Item::ALL.len(), ITEM_KICK - ITEM_EXTRA_BOMB + 1);

    for b in &state.bombs {
        let (r, c) = (b.pos.row as usize, b.pos.col as usize);
        obs.set(BOMB, r, c, 1.0);
        obs.set(BOMB_STRENGTH, r, c, norm(b.blast_strength as f32, 11.0));
        obs.set(BOMB_COUNTDOWN, r, c, norm(b.countdown as f32, 10.0));
    }
    for f in &state.flames {
        obs.set(FLAME, f.pos.row as usize, f.pos.col as usize, norm(f.ttl as f32, 2.0));
    }

    let me = &state.agents[agent];
    if me.alive {
        obs.set(SELF_POS, me.pos.row as usize, me.pos.col as usize, 1.0);
    }
    for (k, id) in (0..NUM_AGENTS).filter(|&i| i != agent).enumerate() {
        let other = &state.agents[id];
        if other.alive {
            obs.set(OPPONENT_POS + k, other.pos.row as usize, other.pos.col as usize, 1.0);
            obs.fill(OPPONENT_ALIVE + k, 1.0);
        }
    }

    obs.fill(SELF_AMMO, norm(me.ammo as f32, 10.0));
    obs.fill(SELF_STRENGTH, norm(me.blast_strength as f32, 11.0));
    obs.fill(SELF_KICK, if me.can_kick { 1.0 } else { 0.0 });
    obs.fill(SELF_MAX_BOMBS, norm(me.max_bombs as f32, 10.0));
    obs.fill(STEP, norm(state.step_count as f32, MAX_STEPS as f32));
    obs.fill(ONE, 1.0);
}

fn norm(v: f32, scale: f32) -> f32 {
    (v / scale).clamp(0.0, 1.0)
}
