//! JSON configuration of matches and searching seats.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bomberplan_core::engine::{Action, MAX_STEPS, NUM_AGENTS};
use bomberplan_core::search::{SearchConfig, SearchMode, DEFAULT_NOISE};

use crate::Error;

/// Where a network comes from: a PWNET file, freshly initialised weights
/// (`random:<seed>`) or the uniform evaluator (`uniform`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WeightsSpec {
    File(PathBuf),
    Random(u64),
    Uniform,
}

impl From<WeightsSpec> for String {
    fn from(w: WeightsSpec) -> String {
        match w {
            WeightsSpec::File(p) => p.display().to_string(),
            WeightsSpec::Random(s) => format!("random:{s}"),
            WeightsSpec::Uniform => "uniform".into(),
        }
    }
}

impl TryFrom<String> for WeightsSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        if s == "uniform" {
            return Ok(WeightsSpec::Uniform);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            let seed = seed
                .parse()
                .map_err(|_| Error::Config(format!("bad weight seed in {s:?}")))?;
            return Ok(WeightsSpec::Random(seed));
        }
        if s.is_empty() {
            return Err(Error::Config("empty weights path".into()));
        }
        Ok(WeightsSpec::File(s.into()))
    }
}

/// Opponent model used inside a search for one agent id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelSpec {
    Simple,
    /// Policy argmax of the searching seat's own network.
    RawNet,
    Fixed(Action),
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        match m {
            ModelSpec::Simple => "simple".into(),
            ModelSpec::RawNet => "rawnet".into(),
            ModelSpec::Fixed(a) => format!("fixed:{}", a.name()),
        }
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        match s.as_str() {
            "simple" => Ok(ModelSpec::Simple),
            "rawnet" => Ok(ModelSpec::RawNet),
            _ => match s.strip_prefix("fixed:").and_then(Action::parse) {
                Some(a) => Ok(ModelSpec::Fixed(a)),
                None => Err(Error::Config(format!("unknown opponent model {s:?}"))),
            },
        }
    }
}

fn default_simulations() -> u32 {
    100
}
fn default_c_puct() -> f64 {
    2.5
}
fn default_max_depth() -> u32 {
    SearchConfig::default().max_depth
}
fn default_models() -> Vec<ModelSpec> {
    vec![ModelSpec::Simple; NUM_AGENTS]
}

/// The `search` block of a searching seat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBlock {
    #[serde(default = "default_simulations")]
    pub simulations: u32,
    #[serde(default = "default_c_puct")]
    pub c_puct: f64,
    #[serde(default)]
    pub q_init: f64,
    #[serde(default)]
    pub temperature: f64,
    /// Root noise weight; 0 disables noise.
    #[serde(default)]
    pub noise_eps: f64,
    #[serde(default = "default_noise_conc")]
    pub noise_conc: f64,
    /// One entry per agent id; the searching agent's own entry is ignored.
    #[serde(default = "default_models")]
    pub opponent_model: Vec<ModelSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
    #[serde(default)]
    pub reuse_tree: bool,
    #[serde(default)]
    pub eval_player_node_post_step: bool,
    /// Search from the true state including buried items.
    #[serde(default)]
    pub true_state: bool,
}

fn default_noise_conc() -> f64 {
    DEFAULT_NOISE.1
}

impl Default for SearchBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl SearchBlock {
    pub fn to_config(&self, mode: SearchMode) -> SearchConfig {
        SearchConfig {
            mode,
            simulations: self.simulations,
            c_puct: self.c_puct,
            q_init: self.q_init,
            root_noise: (self.noise_eps > 0.0).then_some((self.noise_eps, self.noise_conc)),
            temperature: self.temperature,
            search_seed: self.seed,
            max_depth: self.max_depth,
            reuse_tree: self.reuse_tree,
            eval_player_node_post_step: self.eval_player_node_post_step,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.simulations == 0 {
            return Err(Error::Config("simulations must be at least 1".into()));
        }
        if !(self.c_puct > 0.0 && self.c_puct.is_finite()) {
            return Err(Error::Config("c_puct must be positive".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("temperature must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_eps) || !(self.noise_conc > 0.0) {
            return Err(Error::Config("noise_eps must lie in [0, 1] and noise_conc be positive".into()));
        }
        if self.opponent_model.len() != NUM_AGENTS {
            return Err(Error::Config(format!(
                "opponent_model needs {NUM_AGENTS} entries, got {}",
                self.opponent_model.len()
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeatMode {
    SpMcts,
    TpMcts,
}

impl SeatMode {
    pub fn search_mode(&self) -> SearchMode {
        match self {
            SeatMode::SpMcts => SearchMode::SinglePlayer,
            SeatMode::TpMcts => SearchMode::TwoPlayer,
        }
    }
}

/// A searching seat in object form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSeat {
    pub mode: SeatMode,
    pub weights: WeightsSpec,
    #[serde(default)]
    pub search: SearchBlock,
}

/// One seat: `"simple"`, `"rawnet:<weights>"`, `"fixed:<action>"` or a
/// searching seat object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeatSpec {
    Named(NamedSeat),
    Search(SearchSeat),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum NamedSeat {
    Simple,
    RawNet(WeightsSpec),
    Fixed(Action),
}

impl From<NamedSeat> for String {
    fn from(s: NamedSeat) -> String {
        match s {
            NamedSeat::Simple => "simple".into(),
            NamedSeat::RawNet(w) => format!("rawnet:{}", String::from(w)),
            NamedSeat::Fixed(a) => format!("fixed:{}", a.name()),
        }
    }
}

impl TryFrom<String> for NamedSeat {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        if s == "simple" {
            return Ok(NamedSeat::Simple);
        }
        if let Some(w) = s.strip_prefix("rawnet:") {
            return Ok(NamedSeat::RawNet(WeightsSpec::try_from(w.to_string())?));
        }
        if let Some(a) = s.strip_prefix("fixed:") {
            return Action::parse(a)
                .map(NamedSeat::Fixed)
                .ok_or_else(|| Error::Config(format!("unknown action {a:?}")));
        }
        Err(Error::Config(format!("unknown seat {s:?}")))
    }
}

impl SeatSpec {
    pub fn simple() -> Self {
        SeatSpec::Named(NamedSeat::Simple)
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        match self {
            SeatSpec::Named(n) => String::from(n.clone()),
            SeatSpec::Search(s) => {
                let m = match s.mode {
                    SeatMode::SpMcts => "sp-mcts",
                    SeatMode::TpMcts => "tp-mcts",
                };
                format!("{m}({})x{}", String::from(s.weights.clone()), s.search.simulations)
            }
        }
    }

    pub fn weights(&self) -> Option<&WeightsSpec> {
        match self {
            SeatSpec::Named(NamedSeat::RawNet(w)) => Some(w),
            SeatSpec::Search(s) => Some(&s.weights),
            _ => None,
        }
    }
}

fn default_games() -> u32 {
    100
}
fn default_true() -> bool {
    true
}
fn default_step_limit() -> u16 {
    MAX_STEPS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfig {
    pub seats: Vec<SeatSpec>,
    #[serde(default = "default_games")]
    pub games: u32,
    #[serde(default)]
    pub seed: u64,
    /// Permute which seat starts in which corner every game.
    #[serde(default = "default_true")]
    pub randomize_seats: bool,
    #[serde(default = "default_step_limit")]
    pub step_limit: u16,
}

impl MatchConfig {
    pub fn new(seats: Vec<SeatSpec>, games: u32, seed: u64) -> Self {
        Self {
            seats,
            games,
            seed,
            randomize_seats: true,
            step_limit: MAX_STEPS,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.seats.len() != NUM_AGENTS {
            return Err(Error::Config(format!(
                "a match needs exactly {NUM_AGENTS} seats, got {}",
                self.seats.len()
            )));
        }
        if self.games == 0 {
            return Err(Error::Config("games must be at least 1".into()));
        }
        if self.step_limit == 0 || self.step_limit > MAX_STEPS {
            return Err(Error::Config(format!("step_limit must lie in 1..={MAX_STEPS}")));
        }
        for seat in &self.seats {
            if let SeatSpec::Search(s) = seat {
                s.search.validate()?;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: MatchConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
