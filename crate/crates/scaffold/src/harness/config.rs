//! Run configuration: every knob of a training run, its documented default,
//! and a plain-text `key = value` file format. The full configuration is
//! embedded in every checkpoint and metrics file so a run is reproducible
//! from its artifacts alone.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::student::Interaction;

/// Which task family a run trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    TravelLog,
    Dialog,
}

impl Track {
    pub fn name(self) -> &'static str {
        match self {
            Track::TravelLog => "travel-log",
            Track::Dialog => "dialog",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "travel-log" => Ok(Track::TravelLog),
            "dialog" => Ok(Track::Dialog),
            other => Err(Error::Contract(format!(
                "unknown track {other:?} (expected travel-log or dialog)"
            ))),
        }
    }
}

/// Model variant: the full model, its two ablations, or the supervised
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Full model: attention in the state, importance-driven questioning.
    Sn,
    /// Attention kept in the state; the teacher samples questions randomly.
    SnNoImp,
    /// No attention block in the state; the teacher samples randomly.
    SnNoAtt,
    /// Supervised LSTM classifier over the whole text, no teacher.
    LstmBaseline,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sn => "sn",
            Variant::SnNoImp => "sn-no-imp",
            Variant::SnNoAtt => "sn-no-att",
            Variant::LstmBaseline => "lstm-baseline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sn" => Ok(Variant::Sn),
            "sn-no-imp" => Ok(Variant::SnNoImp),
            "sn-no-att" => Ok(Variant::SnNoAtt),
            "lstm-baseline" => Ok(Variant::LstmBaseline),
            other => Err(Error::Contract(format!(
                "unknown variant {other:?} (expected sn, sn-no-imp, sn-no-att or lstm-baseline)"
            ))),
        }
    }

    /// Whether the attention block joins the agent state.
    pub fn attention_in_state(self) -> bool {
        !matches!(self, Variant::SnNoAtt)
    }

    /// Whether the teacher uses the importance strategy (vs random sampling).
    pub fn importance_questions(self) -> bool {
        matches!(self, Variant::Sn)
    }
}

/// Complete description of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub track: Track,
    pub variant: Variant,
    /// Hidden size of every encoder and the memory.
    pub d: usize,
    /// Learning rates tried across restarts, cycled in order.
    pub lr_grid: Vec<f64>,
    pub weight_decay: f64,
    /// Teacher importance threshold; at or above asks about the
    /// current sentence.
    pub importance_threshold: f64,
    pub eps_start: f64,
    pub eps_floor: f64,
    pub gamma: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Target-network sync cadence, in updates.
    pub n_sync: u64,
    /// Attempts per question before the episode advances anyway.
    pub max_trials: usize,
    /// Attention width cap in words; 0 derives it from the data.
    pub n_max: usize,
    /// Random initializations; the best by validation error is reported.
    pub restarts: usize,
    /// Percentage of question events that use the corpus (human) pair on
    /// the dialog track; the rest are teacher-generated.
    pub human_fraction: u8,
    pub seed: u64,
    /// Validation cadence, in episodes.
    pub eval_every: u64,
    pub validation_fraction: f64,
    /// Environment-step budget per restart.
    pub max_steps: u64,
    pub q_hidden: usize,
    pub interaction: Interaction,
    /// Per-candidate match features (dialog track only).
    pub match_features: bool,
    pub plateau_window: usize,
    pub plateau_min_improvement: f64,
    /// Replay transitions required before updates begin.
    pub warmup: usize,
    // Data generation.
    pub attractions: usize,
    pub train_logs: usize,
    pub test_logs: usize,
    pub max_moves: usize,
    pub n_dialogs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            track: Track::TravelLog,
            variant: Variant::Sn,
            d: 128,
            lr_grid: vec![0.1, 0.01],
            weight_decay: 0.001,
            importance_threshold: 0.30,
            eps_start: 0.1,
            eps_floor: 0.01,
            gamma: 0.99,
            buffer_capacity: 10_000,
            batch_size: 32,
            n_sync: 500,
            max_trials: 3,
            n_max: 0,
            restarts: 10,
            human_fraction: 100,
            seed: 1,
            eval_every: 500,
            validation_fraction: 0.10,
            max_steps: 200_000,
            q_hidden: 128,
            interaction: Interaction::Hadamard,
            match_features: false,
            plateau_window: 3,
            plateau_min_improvement: 1.0,
            warmup: 500,
            attractions: 5,
            train_logs: 1000,
            test_logs: 200,
            max_moves: 12,
            n_dialogs: 300,
        }
    }
}

impl RunConfig {
    /// Full-scale travel-log run with the published hyperparameters.
    pub fn paper_travel() -> Self {
        RunConfig::default()
    }

    /// Small travel-log run sized for a single CPU core: 5 attractions,
    /// 300 logs, d = 32, two restarts inside a 30k-step budget.
    pub fn desk_travel() -> Self {
        RunConfig {
            d: 32,
            q_hidden: 32,
            lr_grid: vec![0.003, 0.001],
            restarts: 2,
            max_steps: 15_000,
            eval_every: 100,
            eps_start: 0.2,
            eps_floor: 0.02,
            gamma: 0.9,
            batch_size: 16,
            warmup: 300,
            n_sync: 200,
            buffer_capacity: 5_000,
            train_logs: 300,
            test_logs: 100,
            ..RunConfig::default()
        }
    }

    /// Small restaurant-booking dialog run with match features.
    pub fn desk_dialog() -> Self {
        RunConfig {
            track: Track::Dialog,
            match_features: true,
            ..RunConfig::desk_travel()
        }
    }

    /// Learning rate of a given restart: the grid, cycled.
    pub fn lr_for_restart(&self, restart: usize) -> f64 {
        self.lr_grid[restart % self.lr_grid.len()]
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.d == 0 {
            problems.push("d must be positive".to_string());
        }
        if self.lr_grid.is_empty() || self.lr_grid.iter().any(|&lr| lr <= 0.0) {
            problems.push("lr_grid needs at least one positive rate".to_string());
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_floor) {
            problems.push("eps_start and eps_floor must lie in [0, 1]".to_string());
        }
        if self.eps_floor > self.eps_start {
            problems.push("eps_floor must not exceed eps_start".to_string());
        }
        if !(0.0 < self.gamma && self.gamma <= 1.0) {
            problems.push("gamma must lie in (0, 1]".to_string());
        }
        if !(-1.0..=1.0).contains(&self.importance_threshold) {
            problems.push("importance_threshold must lie in [-1, 1]".to_string());
        }
        if self.human_fraction > 100 {
            problems.push("human_fraction must lie in 0..=100".to_string());
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            problems.push("validation_fraction must lie in (0, 1)".to_string());
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 {
            problems.push("buffer_capacity and batch_size must be positive".to_string());
        }
        if self.batch_size > self.buffer_capacity {
            problems.push("batch_size must not exceed buffer_capacity".to_string());
        }
        if self.max_trials == 0 {
            problems.push("max_trials must be at least 1".to_string());
        }
        if self.restarts == 0 {
            problems.push("restarts must be at least 1".to_string());
        }
        if self.eval_every == 0 {
            problems.push("eval_every must be positive".to_string());
        }
        if self.q_hidden == 0 {
            problems.push("q_hidden must be positive".to_string());
        }
        if self.n_sync == 0 {
            problems.push("n_sync must be at least 1".to_string());
        }
        if self.weight_decay < 0.0 {
            problems.push("weight_decay must be non-negative".to_string());
        }
        if self.attractions == 0 || self.attractions > 81 {
            problems.push("attractions must lie in 1..=81".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Contract(problems.join("; ")))
        }
    }

    /// Apply one `key = value` override.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e| {
                Error::Contract(format!("bad value for {key}: {value:?} ({e})"))
            })
        }
        match key {
            "track" => self.track = Track::parse(value)?,
            "variant" => self.variant = Variant::parse(value)?,
            "d" => self.d = num(key, value)?,
            "lr_grid" => {
                self.lr_grid = value
                    .split(',')
                    .map(|v| num::<f64>(key, v.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "weight_decay" => self.weight_decay = num(key, value)?,
            "importance_threshold" => self.importance_threshold = num(key, value)?,
            "eps_start" => self.eps_start = num(key, value)?,
            "eps_floor" => self.eps_floor = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "buffer_capacity" => self.buffer_capacity = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "n_sync" => self.n_sync = num(key, value)?,
            "max_trials" => self.max_trials = num(key, value)?,
            "n_max" => self.n_max = num(key, value)?,
            "restarts" => self.restarts = num(key, value)?,
            "human_fraction" => self.human_fraction = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "validation_fraction" => self.validation_fraction = num(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "q_hidden" => self.q_hidden = num(key, value)?,
            "interaction" => {
                self.interaction = match value {
                    "hadamard" => Interaction::Hadamard,
                    "mlp" => Interaction::Mlp,
                    other => {
                        return Err(Error::Contract(format!(
                            "unknown interaction {other:?} (expected hadamard or mlp)"
                        )))
                    }
                }
            }
            "match_features" => self.match_features = num(key, value)?,
            "plateau_window" => self.plateau_window = num(key, value)?,
            "plateau_min_improvement" => self.plateau_min_improvement = num(key, value)?,
            "warmup" => self.warmup = num(key, value)?,
            "attractions" => self.attractions = num(key, value)?,
            "train_logs" => self.train_logs = num(key, value)?,
            "test_logs" => self.test_logs = num(key, value)?,
            "max_moves" => self.max_moves = num(key, value)?,
            "n_dialogs" => self.n_dialogs = num(key, value)?,
            other => {
                return Err(Error::Contract(format!("unknown configuration key {other:?}")))
            }
        }
        Ok(())
    }

    /// Serialize every field as `key = value` lines, in a fixed order.
    pub fn to_kv_lines(&self) -> String {
        let lr = self
            .lr_grid
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let interaction = match self.interaction {
            Interaction::Hadamard => "hadamard",
            Interaction::Mlp => "mlp",
        };
        format!(
            "track = {}\nvariant = {}\nd = {}\nlr_grid = {}\nweight_decay = {}\n\
             importance_threshold = {}\neps_start = {}\neps_floor = {}\ngamma = {}\n\
             buffer_capacity = {}\nbatch_size = {}\nn_sync = {}\nmax_trials = {}\n\
             n_max = {}\nrestarts = {}\nhuman_fraction = {}\nseed = {}\neval_every = {}\n\
             validation_fraction = {}\nmax_steps = {}\nq_hidden = {}\ninteraction = {}\n\
             match_features = {}\nplateau_window = {}\nplateau_min_improvement = {}\n\
             warmup = {}\nattractions = {}\ntrain_logs = {}\ntest_logs = {}\n\
             max_moves = {}\nn_dialogs = {}\n",
            self.track.name(),
            self.variant.name(),
            self.d,
            lr,
            self.weight_decay,
            self.importance_threshold,
            self.eps_start,
            self.eps_floor,
            self.gamma,
            self.buffer_capacity,
            self.batch_size,
            self.n_sync,
            self.max_trials,
            self.n_max,
            self.restarts,
            self.human_fraction,
            self.seed,
            self.eval_every,
            self.validation_fraction,
            self.max_steps,
            self.q_hidden,
            interaction,
            self.match_features,
            self.plateau_window,
            self.plateau_min_improvement,
            self.warmup,
            self.attractions,
            self.train_logs,
            self.test_logs,
            self.max_moves,
            self.n_dialogs,
        )
    }

    /// Parse `key = value` lines on top of the given base configuration.
    /// `#` starts a comment; blank lines are skipped.
    pub fn from_kv_lines(text: &str, base: RunConfig) -> Result<Self> {
        let mut cfg = base;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got {raw:?}"),
            })?;
            cfg.apply(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file<P: AsRef<Path>>(path: P, base: RunConfig) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Ingestion(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_kv_lines(&text, base)
    }
}
