//! Per-seat aggregation of finished games and the CSV layouts.
//!
//! `results.csv`: one row per (seed, seat) with the columns of
//! [`RESULT_COLUMNS`]. `games.csv`: one row per (game, seat). Heatmaps are
//! 11 rows of 11 comma-separated visit counts.

use serde::{Deserialize, Serialize};

use bomberplan_core::engine::NUM_AGENTS;

use crate::behavior::BehaviorStats;
use crate::config::MatchConfig;
use crate::game::{GameRecord, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: u64,
}

impl MeanStd {
    /// Population mean and standard deviation; `None` for no samples.
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Option<Self> {
        let xs: Vec<f64> = xs.into_iter().collect();
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            n: xs.len() as u64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeatReport {
    pub seat: usize,
    pub label: String,
    pub games: u64,
    pub wins: u64,
    pub ties: u64,
    pub losses: u64,
    pub win_rate: f64,
    pub tie_rate: f64,
    pub loss_rate: f64,
    /// Episode length.
    pub steps: Option<MeanStd>,
    /// Deepest leaf per move, searching seats only.
    pub search_depth: Option<MeanStd>,
    pub search_time_ms: Option<MeanStd>,
    pub action_frequency: [f64; 6],
    pub unique_positions: f64,
    pub behavior: BehaviorStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub seed: u64,
    pub games: u64,
    pub seats: Vec<SeatReport>,
}

impl MatchReport {
    /// Aggregates games in index order.
    pub fn from_games(cfg: &MatchConfig, games: &[GameRecord]) -> Self {
        let mut games: Vec<&GameRecord> = games.iter().collect();
        games.sort_by_key(|g| g.game);
        let seats = (0..NUM_AGENTS)
            .map(|seat| {
                let mut count = [0u64; 3];
                let mut behavior = BehaviorStats::default();
                let mut depth = Vec::new();
                let mut time = Vec::new();
                for g in &games {
                    let id = g.agent_of(seat);
                    count[match g.outcome[id] {
                        Outcome::Win => 0,
                        Outcome::Tie => 1,
                        Outcome::Loss => 2,
                    }] += 1;
                    behavior.add(id, &g.trajectory[id], &g.chosen[id]);
                    depth.extend(g.search[id].iter().map(|m| m.depth_max as f64));
                    time.extend(g.search[id].iter().map(|m| m.time_ms));
                }
                let n = games.len() as u64;
                let rate = |c: u64| c as f64 / n.max(1) as f64;
                SeatReport {
                    seat,
                    label: cfg.seats[seat].label(),
                    games: n,
                    wins: count[0],
                    ties: count[1],
                    losses: count[2],
                    win_rate: rate(count[0]),
                    tie_rate: rate(count[1]),
                    loss_rate: rate(count[2]),
                    steps: MeanStd::of(games.iter().map(|g| g.steps as f64)),
                    search_depth: MeanStd::of(depth),
                    search_time_ms: MeanStd::of(time),
                    action_frequency: behavior.action_frequency(),
                    unique_positions: behavior.unique_positions(),
                    behavior,
                }
            })
            .collect();
        Self {
            seed: cfg.seed,
            games: games.len() as u64,
            seats,
        }
    }

    pub fn results_csv(&self) -> String {
        let mut out = RESULT_COLUMNS.join(",");
        out.push('\n');
        for s in &self.seats {
            let ms = |m: &Option<MeanStd>| match m {
                Some(m) => format!("{:.6},{:.6}", m.mean, m.std),
                None => ",".into(),
            };
            let freq: Vec<String> = s.action_frequency.iter().map(|f| format!("{f:.6}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{},{:.6}\n",
                self.seed,
                s.seat,
                csv_field(&s.label),
                s.games,
                s.wins,
                s.ties,
                s.losses,
                s.win_rate,
                s.tie_rate,
                s.loss_rate,
                ms(&s.steps),
                ms(&s.search_depth),
                ms(&s.search_time_ms),
                freq.join(","),
                s.unique_positions,
            ));
        }
        out
    }
}

pub const RESULT_COLUMNS: [&str; 23] = [
    "seed",
    "seat",
    "agent",
    "games",
    "wins",
    "ties",
    "losses",
    "win_rate",
    "tie_rate",
    "loss_rate",
    "steps_mean",
    "steps_std",
    "depth_mean",
    "depth_std",
    "time_ms_mean",
    "time_ms_std",
    "freq_idle",
    "freq_up",
    "freq_down",
    "freq_left",
    "freq_right",
    "freq_bomb",
    "unique_positions",
];

pub fn games_csv(cfg: &MatchConfig, games: &[GameRecord]) -> String {
    let mut out = String::from("game,game_seed,seat,agent,agent_id,outcome,steps,moves,depth_mean,time_ms_mean\n");
    let mut games: Vec<&GameRecord> = games.iter().collect();
    games.sort_by_key(|g| g.game);
    for g in games {
        for seat in 0..NUM_AGENTS {
            let id = g.agent_of(seat);
            let depth = MeanStd::of(g.search[id].iter().map(|m| m.depth_max as f64));
            let time = MeanStd::of(g.search[id].iter().map(|m| m.time_ms));
            let opt = |m: Option<MeanStd>| m.map_or(String::new(), |m| format!("{:.4}", m.mean));
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                g.game,
                g.seed,
                seat,
                csv_field(&cfg.seats[seat].label()),
                id,
                g.outcome[id].name(),
                g.steps,
                g.trajectory[id].len(),
                opt(depth),
                opt(time),
            ));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
