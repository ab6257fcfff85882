//! Training samples, outcome targets, board symmetries and the PLRN file
//! format.

mod io;
mod symmetry;

use thiserror::Error;

use crate::engine::{agent_result, AgentId, GameState, ObservationPlanes, NUM_ACTIONS, NUM_AGENTS};

pub use io::{read_dataset, write_dataset, DatasetWriter, MAGIC, RECORD_BYTES, VERSION};
pub use symmetry::Symmetry;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    Version(u32),
    #[error("observation shape {0}x{1}x{2} does not match 23x11x11")]
    Shape(u32, u32, u32),
    #[error("file ends after {read} of {expected} samples")]
    Truncated { read: u64, expected: u64 },
    #[error("episode is not over (step {0})")]
    NotTerminal(u16),
}

/// One training record.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub obs: ObservationPlanes,
    pub pi: [f32; NUM_ACTIONS],
    pub z: f32,
    pub agent_id: u8,
    pub episode_id: u32,
    pub step_index: u16,
}

/// D4 image of a sample: spatial planes move, directions in the policy are
/// permuted accordingly, the outcome is untouched.
pub fn augment(sample: &Sample, sym: Symmetry) -> Sample {
    Sample {
        obs: sym.apply_obs(&sample.obs),
        pi: sym.apply_policy(&sample.pi),
        ..sample.clone()
    }
}

/// Sets every sample's target to the final outcome of its agent.
pub fn assign_outcomes(samples: &mut [Sample], final_state: &GameState) -> Result<(), DatasetError> {
    let z = outcomes(final_state)?;
    for s in samples {
        s.z = z[s.agent_id as usize];
    }
    Ok(())
}

/// Win 1, draw 0, loss -1 for every agent of a finished episode.
pub fn outcomes(final_state: &GameState) -> Result<[f32; NUM_AGENTS], DatasetError> {
    if !final_state.is_terminal() {
        return Err(DatasetError::NotTerminal(final_state.step_count));
    }
    Ok(std::array::from_fn(|i| {
        agent_result(final_state, i).value().expect("terminal outcomes are decided")
    }))
}

/// Collects the samples of one episode until its outcome is known. Agents
/// are only recorded while alive.
#[derive(Debug, Default)]
pub struct EpisodeRecorder {
    episode_id: u32,
    samples: Vec<Sample>,
}

impl EpisodeRecorder {
    pub fn new(episode_id: u32) -> Self {
        Self {
            episode_id,
            samples: Vec::new(),
        }
    }

    /// Records `agent`'s view of `state` with target policy `pi`. Dead
    /// agents are skipped.
    pub fn record(&mut self, state: &GameState, agent: AgentId, pi: [f32; NUM_ACTIONS]) {
        if !state.agents[agent].alive {
            return;
        }
        self.samples.push(Sample {
            obs: crate::engine::encode_observation(state, agent),
            pi,
            z: 0.0,
            agent_id: agent as u8,
            episode_id: self.episode_id,
            step_index: state.step_count,
        });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn finish(mut self, final_state: &GameState) -> Result<Vec<Sample>, DatasetError> {
        assign_outcomes(&mut self.samples, final_state)?;
        Ok(self.samples)
    }
}

pub fn one_hot(a: crate::engine::Action) -> [f32; NUM_ACTIONS] {
    let mut pi = [0.0; NUM_ACTIONS];
    pi[a.index()] = 1.0;
    pi
}
