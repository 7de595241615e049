//! On-disk layout of training runs.
//!
//! ```text
//! runs/<config-hash>/
//!     config.snapshot
//!     curve.csv
//!     checkpoint.dnav
//!     eval/<size>.json
//!     paths/<size>.csv
//! ```
//!
//! Every file is replaced atomically, so a crashed job never leaves a half-written artifact.

use std::io;
use std::path::{Path, PathBuf};

use crate::eval::{size_label, CurvePoint, EvalSummary, TrainOutput, TrainRunConfig};
use crate::report::{self, ReportError};
use crate::rl::{load_checkpoint, save_checkpoint, CheckpointError, PolicyCheckpoint};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{0}")]
    Stale(String),
}

/// `<out-dir>/runs`.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(out_dir: impl AsRef<Path>) -> Self {
        Self { root: out_dir.as_ref().join("runs") }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run(&self, config_hash: &str) -> RunDir {
        RunDir { path: self.root.join(config_hash) }
    }

    pub fn run_for(&self, config: &TrainRunConfig) -> RunDir {
        self.run(&config.hash())
    }
}

/// A finished training run read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRun {
    pub checkpoint: PolicyCheckpoint,
    pub curve: Vec<CurvePoint>,
    pub config_hash: String,
    pub map_hash: String,
}

impl From<TrainOutput> for StoredRun {
    fn from(out: TrainOutput) -> Self {
        Self { checkpoint: out.checkpoint, curve: out.curve, config_hash: out.config_hash, map_hash: out.map_hash }
    }
}

#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn open(path: impl AsRef<Path>) -> Self {
        Self { path: path.as_ref().to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Directory name, which is the training config hash.
    pub fn config_hash(&self) -> String {
        self.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.path.join("config.snapshot")
    }

    pub fn curve_path(&self) -> PathBuf {
        self.path.join("curve.csv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.path.join("checkpoint.dnav")
    }

    pub fn eval_path(&self, size: f64) -> PathBuf {
        self.path.join("eval").join(format!("{}.json", size_label(size)))
    }

    pub fn paths_path(&self, size: f64) -> PathBuf {
        self.path.join("paths").join(format!("{}.csv", size_label(size)))
    }

    fn write(&self, path: &Path, text: &str) -> Result<(), RunError> {
        write_atomic(path, text.as_bytes()).map_err(|e| ReportError::io(path, e).into())
    }

    fn read(&self, path: &Path) -> Result<String, RunError> {
        std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e).into())
    }

    /// Persists the snapshot, the curve and the final checkpoint.
    pub fn save_training(&self, config: &TrainRunConfig, run: &StoredRun) -> Result<(), RunError> {
        self.write(&self.snapshot_path(), &report::train_snapshot(config))?;
        self.write(&self.curve_path(), &report::curve_csv(&run.curve, &run.config_hash, &run.map_hash))?;
        self.save_checkpoint(&run.checkpoint)
    }

    pub fn save_checkpoint(&self, checkpoint: &PolicyCheckpoint) -> Result<(), RunError> {
        std::fs::create_dir_all(&self.path).map_err(|e| ReportError::io(&self.path, e))?;
        Ok(save_checkpoint(checkpoint, &self.checkpoint_path())?)
    }

    pub fn read_curve(&self) -> Result<report::CurveFile, RunError> {
        Ok(report::parse_curve_csv(&self.read(&self.curve_path())?)?)
    }

    /// Loads a completed run; the curve and checkpoint must both carry this directory's hash.
    pub fn load_training(&self) -> Result<StoredRun, RunError> {
        let expected = self.config_hash();
        let curve = self.read_curve()?;
        if curve.config_hash != expected {
            return Err(RunError::Stale(format!("{} was written by config {}", self.curve_path().display(), curve.config_hash)));
        }
        let checkpoint = load_checkpoint(&self.checkpoint_path())?;
        checkpoint.validate(Some(&expected), Some(&curve.map_hash))?;
        Ok(StoredRun { checkpoint, curve: curve.points, config_hash: expected, map_hash: curve.map_hash })
    }

    /// True when curve, checkpoint and snapshot all exist; the final checkpoint is written last.
    pub fn is_trained(&self) -> bool {
        self.curve_path().is_file() && self.checkpoint_path().is_file() && self.snapshot_path().is_file()
    }

    /// Writes `eval/<size>.json` without traces and `paths/<size>.csv` with them.
    pub fn save_eval(&self, summary: &EvalSummary) -> Result<(), RunError> {
        let mut slim = summary.clone();
        let paths = std::mem::take(&mut slim.paths);
        self.write(&self.paths_path(summary.zone_size), &report::paths_csv(&paths, &summary.config_hash, &summary.map_hash))?;
        self.write(&self.eval_path(summary.zone_size), &report::summary_json(&slim))
    }

    /// Reads a stored evaluation back, re-attaching its traces when present.
    pub fn load_eval(&self, size: f64) -> Result<Option<EvalSummary>, RunError> {
        let path = self.eval_path(size);
        if !path.is_file() {
            return Ok(None);
        }
        let mut summary = report::parse_summary_json(&self.read(&path)?)?;
        let paths = self.paths_path(size);
        if paths.is_file() {
            let file = report::parse_paths_csv(&self.read(&paths)?)?;
            report::check_hash("paths", &summary.config_hash, &file.config_hash, false)?;
            summary.paths = file.paths;
        }
        Ok(Some(summary))
    }
}
