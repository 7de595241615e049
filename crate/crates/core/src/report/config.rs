//! Run configuration files.
//!
//! ```text
//! [env]
//! mode = lidar
//! zone_size = 3
//! [train]
//! algorithm = ppo
//! steps = 500000
//! ```
//!
//! Missing keys take their defaults, which depend on `algorithm` and `mode`.
//! Unknown sections or keys are errors.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::env::ObservationMode;
use crate::eval::{EvalProtocol, TrainRunConfig};
use crate::hash_hex;
use crate::rl::Algorithm;
use crate::world::Placement;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{section}.{key}`")]
    UnknownKey { section: String, key: String },
    #[error("`{section}.{key}`: {message}")]
    Value { section: String, key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryFormat {
    Json,
    Csv,
}

impl SummaryFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            SummaryFormat::Json => "json",
            SummaryFormat::Csv => "csv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub format: SummaryFormat,
    /// Moving-average window of plotted learning curves, in curve points.
    pub smoothing: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { format: SummaryFormat::Json, smoothing: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfigFile {
    pub train: TrainRunConfig,
    pub eval: EvalProtocol,
    pub report: ReportOptions,
}

const SECTIONS: [&str; 4] = ["env", "eval", "report", "train"];

const KEYS: &[(&str, &str)] = &[
    ("env", "camera_height"),
    ("env", "camera_width"),
    ("env", "goal"),
    ("env", "lidar_clamp"),
    ("env", "lidar_sigma"),
    ("env", "map"),
    ("env", "mode"),
    ("env", "zone_placement"),
    ("env", "zone_size"),
    ("eval", "episodes"),
    ("eval", "goal"),
    ("eval", "map"),
    ("eval", "record_paths"),
    ("eval", "repeats"),
    ("eval", "seed"),
    ("eval", "sizes"),
    ("eval", "zone_placement"),
    ("report", "format"),
    ("report", "smoothing"),
    ("train", "algorithm"),
    ("train", "checkpoint_interval"),
    ("train", "curve_interval"),
    ("train", "ppo_batch_size"),
    ("train", "ppo_clip"),
    ("train", "ppo_entropy_coef"),
    ("train", "ppo_epochs"),
    ("train", "ppo_gae_lambda"),
    ("train", "ppo_gamma"),
    ("train", "ppo_hidden"),
    ("train", "ppo_horizon"),
    ("train", "ppo_learning_rate"),
    ("train", "ppo_max_grad_norm"),
    ("train", "ppo_normalize_advantages"),
    ("train", "ppo_value_coef"),
    ("train", "seed"),
    ("train", "steps"),
    ("train", "td3_batch_size"),
    ("train", "td3_exploration_noise"),
    ("train", "td3_gamma"),
    ("train", "td3_gradient_steps"),
    ("train", "td3_hidden"),
    ("train", "td3_learning_rate"),
    ("train", "td3_learning_starts"),
    ("train", "td3_policy_delay"),
    ("train", "td3_replay_capacity"),
    ("train", "td3_target_noise"),
    ("train", "td3_target_noise_clip"),
    ("train", "td3_tau"),
    ("train", "td3_train_freq"),
];

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn auto<T>(value: Option<T>, name: impl Fn(&T) -> &'static str) -> String {
    value.as_ref().map_or("auto".to_string(), |v| name(v).to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|_| format!("bad list element `{}`", p.trim()))).collect()
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|_| format!("expected a number, found `{s}`"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, found `{s}`")),
    }
}

fn parse_placement(s: &str) -> Result<Placement, String> {
    Placement::parse(s).ok_or_else(|| format!("expected random or static-center, found `{s}`"))
}

fn parse_auto_placement(s: &str) -> Result<Option<Placement>, String> {
    if s == "auto" {
        Ok(None)
    } else {
        parse_placement(s).map(Some)
    }
}

impl RunConfigFile {
    pub fn new(algorithm: Algorithm, mode: ObservationMode) -> Self {
        Self { train: TrainRunConfig::new(algorithm, mode), eval: EvalProtocol::default(), report: ReportOptions::default() }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<String> {
        let t = &self.train;
        let e = &self.eval;
        Some(match (section, key) {
            ("env", "camera_height") => t.camera_height.to_string(),
            ("env", "camera_width") => t.camera_width.to_string(),
            ("env", "goal") => t.goal.as_str().to_string(),
            ("env", "lidar_clamp") => t.perturbation.lidar_clamp.to_string(),
            ("env", "lidar_sigma") => t.perturbation.lidar_sigma.to_string(),
            ("env", "map") => t.map.clone(),
            ("env", "mode") => t.mode.as_str().to_string(),
            ("env", "zone_placement") => t.zone_placement.as_str().to_string(),
            ("env", "zone_size") => t.zone_size.to_string(),
            ("eval", "episodes") => e.episodes.to_string(),
            ("eval", "goal") => auto(e.goal, Placement::as_str),
            ("eval", "map") => e.map.clone(),
            ("eval", "record_paths") => e.record_paths.to_string(),
            ("eval", "repeats") => e.repeats.to_string(),
            ("eval", "seed") => e.seed.to_string(),
            ("eval", "sizes") => join(&e.zone_sizes),
            ("eval", "zone_placement") => auto(e.zone_placement, Placement::as_str),
            ("report", "format") => self.report.format.as_str().to_string(),
            ("report", "smoothing") => self.report.smoothing.to_string(),
            ("train", "algorithm") => t.algorithm.as_str().to_string(),
            ("train", "checkpoint_interval") => t.checkpoint_interval.to_string(),
            ("train", "curve_interval") => t.curve_interval.to_string(),
            ("train", "ppo_batch_size") => t.ppo.batch_size.to_string(),
            ("train", "ppo_clip") => t.ppo.clip.to_string(),
            ("train", "ppo_entropy_coef") => t.ppo.entropy_coef.to_string(),
            ("train", "ppo_epochs") => t.ppo.epochs.to_string(),
            ("train", "ppo_gae_lambda") => t.ppo.gae_lambda.to_string(),
            ("train", "ppo_gamma") => t.ppo.gamma.to_string(),
            ("train", "ppo_hidden") => join(&t.ppo.hidden),
            ("train", "ppo_horizon") => t.ppo.horizon.to_string(),
            ("train", "ppo_learning_rate") => t.ppo.learning_rate.to_string(),
            ("train", "ppo_max_grad_norm") => t.ppo.max_grad_norm.to_string(),
            ("train", "ppo_normalize_advantages") => t.ppo.normalize_advantages.to_string(),
            ("train", "ppo_value_coef") => t.ppo.value_coef.to_string(),
            ("train", "seed") => t.seed.to_string(),
            ("train", "steps") => t.total_steps.to_string(),
            ("train", "td3_batch_size") => t.td3.batch_size.to_string(),
            ("train", "td3_exploration_noise") => t.td3.exploration_noise.to_string(),
            ("train", "td3_gamma") => t.td3.gamma.to_string(),
            ("train", "td3_gradient_steps") => t.td3.gradient_steps.to_string(),
            ("train", "td3_hidden") => join(&t.td3.hidden),
            ("train", "td3_learning_rate") => t.td3.learning_rate.to_string(),
            ("train", "td3_learning_starts") => t.td3.learning_starts.to_string(),
            ("train", "td3_policy_delay") => t.td3.policy_delay.to_string(),
            ("train", "td3_replay_capacity") => t.td3.replay_capacity.to_string(),
            ("train", "td3_target_noise") => t.td3.target_noise.to_string(),
            ("train", "td3_target_noise_clip") => t.td3.target_noise_clip.to_string(),
            ("train", "td3_tau") => t.td3.tau.to_string(),
            ("train", "td3_train_freq") => t.td3.train_freq.to_string(),
            _ => return None,
        })
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let err = |message: String| ConfigError::Value { section: section.into(), key: key.into(), message };
        let t = &mut self.train;
        let e = &mut self.eval;
        let v = value.trim();
        match (section, key) {
            ("env", "camera_height") => t.camera_height = parse_num(v).map_err(err)?,
            ("env", "camera_width") => t.camera_width = parse_num(v).map_err(err)?,
            ("env", "goal") => t.goal = parse_placement(v).map_err(err)?,
            ("env", "lidar_clamp") => t.perturbation.lidar_clamp = parse_num(v).map_err(err)?,
            ("env", "lidar_sigma") => t.perturbation.lidar_sigma = parse_num(v).map_err(err)?,
            ("env", "map") => t.map = v.to_string(),
            ("env", "mode") => {
                t.mode = ObservationMode::parse(v).ok_or_else(|| err(format!("expected lidar or camera, found `{v}`")))?
            }
            ("env", "zone_placement") => t.zone_placement = parse_placement(v).map_err(err)?,
            ("env", "zone_size") => t.zone_size = parse_num(v).map_err(err)?,
            ("eval", "episodes") => e.episodes = parse_num(v).map_err(err)?,
            ("eval", "goal") => e.goal = parse_auto_placement(v).map_err(err)?,
            ("eval", "map") => e.map = v.to_string(),
            ("eval", "record_paths") => e.record_paths = parse_bool(v).map_err(err)?,
            ("eval", "repeats") => e.repeats = parse_num(v).map_err(err)?,
            ("eval", "seed") => e.seed = parse_num(v).map_err(err)?,
            ("eval", "sizes") => e.zone_sizes = parse_list(v).map_err(err)?,
            ("eval", "zone_placement") => e.zone_placement = parse_auto_placement(v).map_err(err)?,
            ("report", "format") => {
                self.report.format = SummaryFormat::parse(v).ok_or_else(|| err(format!("expected json or csv, found `{v}`")))?
            }
            ("report", "smoothing") => self.report.smoothing = parse_num(v).map_err(err)?,
            ("train", "algorithm") => {
                t.algorithm = Algorithm::parse(v).ok_or_else(|| err(format!("expected ppo or td3, found `{v}`")))?
            }
            ("train", "checkpoint_interval") => t.checkpoint_interval = parse_num(v).map_err(err)?,
            ("train", "curve_interval") => t.curve_interval = parse_num(v).map_err(err)?,
            ("train", "ppo_batch_size") => t.ppo.batch_size = parse_num(v).map_err(err)?,
            ("train", "ppo_clip") => t.ppo.clip = parse_num(v).map_err(err)?,
            ("train", "ppo_entropy_coef") => t.ppo.entropy_coef = parse_num(v).map_err(err)?,
            ("train", "ppo_epochs") => t.ppo.epochs = parse_num(v).map_err(err)?,
            ("train", "ppo_gae_lambda") => t.ppo.gae_lambda = parse_num(v).map_err(err)?,
            ("train", "ppo_gamma") => t.ppo.gamma = parse_num(v).map_err(err)?,
            ("train", "ppo_hidden") => t.ppo.hidden = parse_list(v).map_err(err)?,
            ("train", "ppo_horizon") => t.ppo.horizon = parse_num(v).map_err(err)?,
            ("train", "ppo_learning_rate") => t.ppo.learning_rate = parse_num(v).map_err(err)?,
            ("train", "ppo_max_grad_norm") => t.ppo.max_grad_norm = parse_num(v).map_err(err)?,
            ("train", "ppo_normalize_advantages") => t.ppo.normalize_advantages = parse_bool(v).map_err(err)?,
            ("train", "ppo_value_coef") => t.ppo.value_coef = parse_num(v).map_err(err)?,
            ("train", "seed") => t.seed = parse_num(v).map_err(err)?,
            ("train", "steps") => t.total_steps = parse_num(v).map_err(err)?,
            ("train", "td3_batch_size") => t.td3.batch_size = parse_num(v).map_err(err)?,
            ("train", "td3_exploration_noise") => t.td3.exploration_noise = parse_num(v).map_err(err)?,
            ("train", "td3_gamma") => t.td3.gamma = parse_num(v).map_err(err)?,
            ("train", "td3_gradient_steps") => t.td3.gradient_steps = parse_num(v).map_err(err)?,
            ("train", "td3_hidden") => t.td3.hidden = parse_list(v).map_err(err)?,
            ("train", "td3_learning_rate") => t.td3.learning_rate = parse_num(v).map_err(err)?,
            ("train", "td3_learning_starts") => t.td3.learning_starts = parse_num(v).map_err(err)?,
            ("train", "td3_policy_delay") => t.td3.policy_delay = parse_num(v).map_err(err)?,
            ("train", "td3_replay_capacity") => t.td3.replay_capacity = parse_num(v).map_err(err)?,
            ("train", "td3_target_noise") => t.td3.target_noise = parse_num(v).map_err(err)?,
            ("train", "td3_target_noise_clip") => t.td3.target_noise_clip = parse_num(v).map_err(err)?,
            ("train", "td3_tau") => t.td3.tau = parse_num(v).map_err(err)?,
            ("train", "td3_train_freq") => t.td3.train_freq = parse_num(v).map_err(err)?,
            _ => return Err(ConfigError::UnknownKey { section: section.into(), key: key.into() }),
        }
        Ok(())
    }

    /// Applies `section.key=value` overrides after the file has been read.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("override `{assignment}` is not of the form section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| ConfigError::Invalid(format!("override key `{path}` is not of the form section.key")))?;
        self.set(section, key, value)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(usize, String, String, String)> = Vec::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::Syntax { line: line_no, message: format!("unknown section [{name}]") });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: line_no, message: "expected `key = value`".into() })?;
            let sec = section
                .clone()
                .ok_or_else(|| ConfigError::Syntax { line: line_no, message: "key outside of a section".into() })?;
            let key = key.trim().to_string();
            if !KEYS.contains(&(sec.as_str(), key.as_str())) {
                return Err(ConfigError::UnknownKey { section: sec, key });
            }
            if entries.iter().any(|(_, s, k, _)| *s == sec && *k == key) {
                return Err(ConfigError::Syntax { line: line_no, message: format!("duplicate key `{sec}.{key}`") });
            }
            entries.push((line_no, sec, key, value.trim().to_string()));
        }
        let lookup = |s: &str, k: &str| entries.iter().find(|(_, es, ek, _)| es == s && ek == k).map(|e| e.3.clone());
        let mut cfg = Self::new(Algorithm::Ppo, ObservationMode::Lidar);
        // the algorithm and mode pick the defaults for everything else
        if let Some(v) = lookup("train", "algorithm") {
            cfg.set("train", "algorithm", &v)?;
        }
        if let Some(v) = lookup("env", "mode") {
            cfg.set("env", "mode", &v)?;
        }
        let mut cfg = Self::new(cfg.train.algorithm, cfg.train.mode);
        for (_, s, k, v) in &entries {
            cfg.set(s, k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate().map_err(ConfigError::Invalid)?;
        self.eval.validate().map_err(ConfigError::Invalid)
    }

    fn render(&self, keep: impl Fn(&str, &str) -> bool) -> String {
        let mut by_section: BTreeMap<&str, Vec<(&str, String)>> = BTreeMap::new();
        for &(s, k) in KEYS {
            if keep(s, k) {
                by_section.entry(s).or_default().push((k, self.get(s, k).expect("listed key")));
            }
        }
        let mut out = String::new();
        for (s, mut kv) in by_section {
            kv.sort();
            out.push_str(&format!("[{s}]\n"));
            for (k, v) in kv {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    /// Every key, sorted within alphabetically ordered sections, LF line endings.
    pub fn to_canonical(&self) -> String {
        self.render(|_, _| true)
    }

    /// SHA-256 of [`RunConfigFile::to_canonical`].
    pub fn hash(&self) -> String {
        hash_hex(&Sha256::digest(self.to_canonical().as_bytes()))
    }
}

/// Canonical text of the training-relevant keys: `[env]` and the active algorithm's `[train]` keys.
pub fn train_snapshot(config: &TrainRunConfig) -> String {
    let file = RunConfigFile { train: config.clone(), eval: EvalProtocol::default(), report: ReportOptions::default() };
    let other = match config.algorithm {
        Algorithm::Ppo => "td3_",
        Algorithm::Td3 => "ppo_",
    };
    file.render(|s, k| s == "env" || (s == "train" && !k.starts_with(other)))
}

/// SHA-256 of [`train_snapshot`]; names the run directory.
pub fn train_config_hash(config: &TrainRunConfig) -> String {
    hash_hex(&Sha256::digest(train_snapshot(config).as_bytes()))
}
