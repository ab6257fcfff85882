//! The four subcommands as library functions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use bomberplan_core::dataset::{one_hot, DatasetWriter, EpisodeRecorder, Sample};
use bomberplan_core::engine::replay::Replay;
use bomberplan_core::engine::{NUM_ACTIONS, NUM_AGENTS, MAX_STEPS};
use bomberplan_core::search::{policy_target_sharpen, DEFAULT_NOISE};

use crate::behavior::{action_names, behavior_stats, BehaviorStats};
use crate::config::{MatchConfig, SeatSpec, WeightsSpec};
use crate::game::{play_game, play_game_with, GameRecord, Networks, Outcome};
use crate::report::{games_csv, MatchReport};
use crate::Error;

pub const DEMOS_FILE: &str = "demos.plrn";
pub const RL_FILE: &str = "rl.plrn";

/// Games handed to the pool at once; results are consumed in index order.
const CHUNK: u32 = 64;

fn pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    write(path, text + "\n")
}

/// Plays games `0..games` in chunks, handing each chunk's results to `sink`
/// in game order. `sink` returns false to stop early.
fn run_chunked<T: Send>(
    threads: usize,
    games: u32,
    play: impl Fn(u32) -> T + Sync,
    mut sink: impl FnMut(Vec<T>) -> Result<bool, Error>,
) -> Result<(), Error> {
    let pool = pool(threads)?;
    let mut start = 0;
    while start < games {
        let end = games.min(start + CHUNK);
        let batch: Vec<T> = pool.install(|| (start..end).into_par_iter().map(&play).collect());
        if !sink(batch)? {
            break;
        }
        start = end;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub episodes: u32,
    pub samples: u64,
    pub path: PathBuf,
}

/// Four heuristic agents; every live agent's decision becomes a sample
/// with a one-hot target.
pub fn generate_demos(seed: u64, episodes: u32, out: &Path, threads: usize) -> Result<DemoSummary, Error> {
    if episodes == 0 {
        return Err(Error::Config("episodes must be at least 1".into()));
    }
    create_dir(out)?;
    let cfg = MatchConfig::new(vec![SeatSpec::simple(); NUM_AGENTS], episodes, seed);
    let nets = Networks::default();
    let path = out.join(DEMOS_FILE);
    let mut writer = DatasetWriter::create(&path)?;
    run_chunked(
        threads,
        episodes,
        |game| -> Result<Vec<Sample>, Error> {
            let mut rec = EpisodeRecorder::new(game);
            let r = play_game_with(&cfg, &nets, game, |d| rec.record(d.state, d.agent, one_hot(d.action)));
            Ok(rec.finish(&r.final_state)?)
        },
        |batch| {
            for samples in batch {
                for s in samples? {
                    writer.push(&s)?;
                }
            }
            Ok(true)
        },
    )?;
    let samples = writer.finish()?;
    Ok(DemoSummary { episodes, samples, path })
}

/// Runs a match, writes its reports, and returns the aggregate.
///
/// Files in `out`: `config.json` (resolved configuration), `results.csv`,
/// `games.csv`, `heatmap_seat{k}.csv`, `report.json` and one
/// `replays/game_{i:05}.prep` per game.
pub fn eval(cfg: &MatchConfig, out: &Path, threads: usize) -> Result<MatchReport, Error> {
    cfg.validate()?;
    let nets = Networks::load(&cfg.seats)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    let replays = out.join("replays");
    create_dir(&replays)?;
    let mut games: Vec<GameRecord> = Vec::with_capacity(cfg.games as usize);
    run_chunked(
        threads,
        cfg.games,
        |g| play_game(cfg, &nets, g),
        |batch| {
            for r in batch {
                let path = replays.join(format!("game_{:05}.prep", r.game));
                r.replay().save(&path).map_err(|e| Error::io(&path, e))?;
                games.push(r);
            }
            Ok(true)
        },
    )?;
    let report = MatchReport::from_games(cfg, &games);
    write(&out.join("results.csv"), report.results_csv())?;
    write(&out.join("games.csv"), games_csv(cfg, &games))?;
    for s in &report.seats {
        write(&out.join(format!("heatmap_seat{}.csv", s.seat)), s.behavior.heatmap_csv())?;
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlSummary {
    pub episodes: u32,
    pub samples: u64,
    pub wins: u32,
    pub ties: u32,
    pub losses: u32,
    pub win_rate: f64,
    pub action_frequency: [f64; NUM_ACTIONS],
    pub seconds: f64,
    pub samples_per_second: f64,
}

/// Self-play data for the first search seat of `cfg` against the other
/// seats. Root noise is always on; targets are sharpened visit
/// distributions. Whole episodes are kept, so the sample count may exceed
/// `steps_target`.
pub fn rl_datagen(
    cfg: &MatchConfig,
    weights: Option<&Path>,
    steps_target: u64,
    out: &Path,
    threads: usize,
) -> Result<RlSummary, Error> {
    if steps_target == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let mut cfg = cfg.clone();
    cfg.step_limit = MAX_STEPS;
    cfg.validate()?;
    let player = cfg
        .seats
        .iter()
        .position(|s| matches!(s, SeatSpec::Search(_)))
        .ok_or_else(|| Error::Config("rl-datagen needs an sp-mcts or tp-mcts seat".into()))?;
    if let SeatSpec::Search(s) = &mut cfg.seats[player] {
        if let Some(w) = weights {
            s.weights = WeightsSpec::File(w.to_path_buf());
        }
        if s.search.noise_eps == 0.0 {
            s.search.noise_eps = DEFAULT_NOISE.0;
            s.search.noise_conc = DEFAULT_NOISE.1;
        }
    }
    let nets = Networks::load(&cfg.seats)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), &cfg)?;
    let path = out.join(RL_FILE);
    let mut writer = DatasetWriter::create(&path)?;
    let t = Instant::now();
    let mut outcomes = Vec::new();
    let mut stats = BehaviorStats::default();
    let cfg = &cfg;
    run_chunked(
        threads,
        u32::MAX,
        |game| -> Result<(Vec<Sample>, GameRecord), Error> {
            let mut rec = EpisodeRecorder::new(game);
            let r = play_game_with(cfg, &nets, game, |d| {
                if d.seat == player {
                    let pi = d.search.expect("search seats report their search").pi;
                    rec.record(d.state, d.agent, policy_target_sharpen(&pi));
                }
            });
            Ok((rec.finish(&r.final_state)?, r))
        },
        |batch| {
            for item in batch {
                let (samples, r) = item?;
                let id = r.agent_of(player);
                outcomes.push(r.outcome[id]);
                stats.add(id, &r.trajectory[id], &r.chosen[id]);
                for s in &samples {
                    writer.push(s)?;
                }
                if writer.count() >= steps_target {
                    return Ok(false);
                }
            }
            Ok(true)
        },
    )?;
    let samples = writer.finish()?;
    let seconds = t.elapsed().as_secs_f64();
    let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count() as u32;
    let summary = RlSummary {
        episodes: outcomes.len() as u32,
        samples,
        wins: count(Outcome::Win),
        ties: count(Outcome::Tie),
        losses: count(Outcome::Loss),
        win_rate: count(Outcome::Win) as f64 / outcomes.len().max(1) as f64,
        action_frequency: stats.action_frequency(),
        seconds,
        samples_per_second: samples as f64 / seconds.max(1e-9),
    };
    write_json(&out.join("rl_stats.json"), &summary)?;
    Ok(summary)
}

/// Replay files named directly or found (non-recursively, `*.prep`) in the
/// named directories, sorted by path.
pub fn collect_replays(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Error> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "prep"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::Config("no replay files given".into()));
    }
    Ok(files)
}

/// Behaviour statistics per agent id over replay files.
///
/// Files in `out`: `behavior.csv` (agent, decisions, freq_*,
/// unique_positions) and `heatmap_agent{k}.csv`.
pub fn stats(inputs: &[PathBuf], out: &Path) -> Result<[BehaviorStats; NUM_AGENTS], Error> {
    let replays = collect_replays(inputs)?
        .iter()
        .map(|p| Replay::load(p).map_err(Error::from))
        .collect::<Result<Vec<_>, _>>()?;
    let per_agent = behavior_stats(&replays)?;
    create_dir(out)?;
    let mut csv = String::from("agent,decisions");
    for n in action_names() {
        csv.push_str(&format!(",freq_{n}"));
    }
    csv.push_str(",unique_positions\n");
    for (id, s) in per_agent.iter().enumerate() {
        csv.push_str(&format!("{id},{}", s.decisions()));
        for f in s.action_frequency() {
            csv.push_str(&format!(",{f:.6}"));
        }
        csv.push_str(&format!(",{:.6}\n", s.unique_positions()));
        write(&out.join(format!("heatmap_agent{id}.csv")), s.heatmap_csv())?;
    }
    write(&out.join("behavior.csv"), csv)?;
    Ok(per_agent)
}
