//! Match evaluation, demonstration generation and RL data generation for the
//! bomber planner.

pub mod behavior;
pub mod commands;
pub mod config;
pub mod game;
pub mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

use bomberplan_core::dataset::DatasetError;
use bomberplan_core::engine::replay::ReplayError;
use bomberplan_core::model::ModelError;
use bomberplan_core::search::SearchError;

pub use behavior::BehaviorStats;
pub use config::{MatchConfig, SeatSpec};
pub use game::{play_game, GameRecord, Outcome};
pub use report::{MatchReport, MeanStd, SeatReport};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("weights: {0}")]
    Model(#[from] ModelError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("replay: {0}")]
    Replay(#[from] ReplayError),
    #[error("search: {0}")]
    Search(#[from] SearchError),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Model(_) => "weights",
            Error::Dataset(_) => "dataset",
            Error::Replay(_) => "replay",
            Error::Search(_) => "search",
        }
    }

    /// One-line JSON form printed on failure.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}
