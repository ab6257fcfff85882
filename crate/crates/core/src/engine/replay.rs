//! Replay files: a board seed plus the joint action of every step.
//!
//! Layout (little-endian): magic `PREP`, version u32, seed u64, step count
//! u32, then four action bytes per step in agent-id order.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{generate_board, step, Action, GameState, StepError, NUM_AGENTS};

pub const MAGIC: &[u8; 4] = b"PREP";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a replay file (bad magic)")]
    BadMagic,
    #[error("unsupported replay version {0}")]
    Version(u32),
    #[error("invalid action byte {0}")]
    BadAction(u8),
    #[error("replay does not fit the rules: {0}")]
    Illegal(#[from] StepError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    pub seed: u64,
    pub actions: Vec<[Action; NUM_AGENTS]>,
}

impl Replay {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            actions: Vec::new(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.actions.len() as u32).to_le_bytes())?;
        for joint in &self.actions {
            w.write_all(&joint.map(|a| a as u8))?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, ReplayError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ReplayError::BadMagic);
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(ReplayError::Version(version));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        let mut actions = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let mut raw = [0u8; NUM_AGENTS];
            r.read_exact(&mut raw)?;
            let mut joint = [Action::Idle; NUM_AGENTS];
            for (slot, byte) in joint.iter_mut().zip(raw) {
                *slot = Action::from_index(byte as usize).ok_or(ReplayError::BadAction(byte))?;
            }
            actions.push(joint);
        }
        Ok(Self { seed, actions })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        Self::read_from(io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Every state of the episode, starting with the generated board.
    pub fn states(&self) -> Result<Vec<GameState>, ReplayError> {
        let mut out = Vec::with_capacity(self.actions.len() + 1);
        let mut cur = generate_board(self.seed);
        for joint in &self.actions {
            let next = step(&cur, joint)?;
            out.push(std::mem::replace(&mut cur, next));
        }
        out.push(cur);
        Ok(out)
    }
}
