//! Action distributions, start-corner-normalised position heatmaps and the
//! unique-positions statistic.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use bomberplan_core::dataset::Symmetry;
use bomberplan_core::engine::replay::Replay;
use bomberplan_core::engine::{Action, AgentId, Position, BOARD_SIZE, NUM_ACTIONS, NUM_AGENTS};

use crate::Error;

pub const WINDOW: usize = 20;

/// Quarter turns that bring an agent's start corner to the upper left.
pub fn normalizing_rotation(agent: AgentId) -> Symmetry {
    Symmetry::rotation(agent as u8)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStats {
    pub action_counts: [u64; NUM_ACTIONS],
    pub heatmap: [[u64; BOARD_SIZE]; BOARD_SIZE],
    pub windows: u64,
    pub unique_in_windows: u64,
}

impl BehaviorStats {
    /// Adds one agent's decisions of one episode: the positions it acted
    /// from and the actions it chose.
    pub fn add(&mut self, agent: AgentId, positions: &[Position], counts: &[u64; NUM_ACTIONS]) {
        for (c, n) in self.action_counts.iter_mut().zip(counts) {
            *c += n;
        }
        let g = normalizing_rotation(agent);
        for &p in positions {
            let q = g.apply_pos(p);
            self.heatmap[q.row as usize][q.col as usize] += 1;
        }
        // non-overlapping windows; a short episode counts as one window
        let full = positions.len() / WINDOW;
        let chunks: Vec<&[Position]> = if full == 0 && !positions.is_empty() {
            vec![positions]
        } else {
            positions.chunks_exact(WINDOW).collect()
        };
        for w in chunks {
            let distinct: HashSet<Position> = w.iter().copied().collect();
            self.windows += 1;
            self.unique_in_windows += distinct.len() as u64;
        }
    }

    pub fn merge(&mut self, other: &BehaviorStats) {
        for (a, b) in self.action_counts.iter_mut().zip(&other.action_counts) {
            *a += b;
        }
        for (ra, rb) in self.heatmap.iter_mut().zip(&other.heatmap) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self.windows += other.windows;
        self.unique_in_windows += other.unique_in_windows;
    }

    /// Share of each action among all decisions.
    pub fn action_frequency(&self) -> [f64; NUM_ACTIONS] {
        let total: u64 = self.action_counts.iter().sum();
        self.action_counts.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
    }

    /// Distinct cells per 20-step window, averaged over windows.
    pub fn unique_positions(&self) -> f64 {
        if self.windows == 0 {
            0.0
        } else {
            self.unique_in_windows as f64 / self.windows as f64
        }
    }

    pub fn decisions(&self) -> u64 {
        self.action_counts.iter().sum()
    }

    pub fn heatmap_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.heatmap {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Per-agent statistics of recorded episodes.
pub fn behavior_stats(replays: &[Replay]) -> Result<[BehaviorStats; NUM_AGENTS], Error> {
    let mut out: [BehaviorStats; NUM_AGENTS] = Default::default();
    for r in replays {
        let states = r.states()?;
        for (id, stats) in out.iter_mut().enumerate() {
            let mut positions = Vec::new();
            let mut counts = [0u64; NUM_ACTIONS];
            for (s, acts) in states.iter().zip(&r.actions) {
                if s.agents[id].alive {
                    positions.push(s.agents[id].pos);
                    counts[acts[id].index()] += 1;
                }
            }
            stats.add(id, &positions, &counts);
        }
    }
    Ok(out)
}

pub fn action_names() -> [&'static str; NUM_ACTIONS] {
    Action::ALL.map(Action::name)
}
