//! JSON and CSV serialisation of evaluation summaries, learning curves and path traces.
//!
//! Floats are written with six significant digits. Every CSV starts with a
//! `# config_hash=... map_hash=...` line naming the run that produced it.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::eval::{CurvePoint, EvalSummary, MatrixCell, PathTrace, RegimeMatrix, RepeatCounts};
use crate::report::SummaryFormat;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
    #[error("{what} hash mismatch: expected {expected}, found {found} (use --force to override)")]
    Mismatch { what: &'static str, expected: String, found: String },
}

impl ReportError {
    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        ReportError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    fn format(what: &'static str, message: impl Into<String>) -> Self {
        ReportError::Format { what, message: message.into() }
    }
}

/// Rounds to `digits` significant digits through the decimal representation.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Six significant digits, shortest form; `NaN` and `inf` spelled out.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{}", round_sig(x, 6))
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x, 6)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and rounded floats; re-emitting a parsed document is byte-identical.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("summary types serialise");
    round_value(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("json value serialises");
    out.push('\n');
    out
}

pub fn summary_json(summary: &EvalSummary) -> String {
    to_canonical_json(summary)
}

pub fn parse_summary_json(text: &str) -> Result<EvalSummary, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::format("summary json", e.to_string()))
}

pub fn matrix_json(matrix: &RegimeMatrix) -> String {
    to_canonical_json(matrix)
}

pub fn parse_matrix_json(text: &str) -> Result<RegimeMatrix, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::format("matrix json", e.to_string()))
}

pub fn hash_header(config_hash: &str, map_hash: &str) -> String {
    format!("# config_hash={config_hash} map_hash={map_hash}\n")
}

/// Reads the `# config_hash=... map_hash=...` line; returns the hashes and the remaining lines.
pub fn split_hash_header<'a>(text: &'a str, what: &'static str) -> Result<(String, String, Vec<&'a str>), ReportError> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| ReportError::format(what, "empty file"))?;
    let rest = first.strip_prefix("# ").ok_or_else(|| ReportError::format(what, "missing hash header"))?;
    let mut config = None;
    let mut map = None;
    for part in rest.split_whitespace() {
        match part.split_once('=') {
            Some(("config_hash", v)) => config = Some(v.to_string()),
            Some(("map_hash", v)) => map = Some(v.to_string()),
            _ => {}
        }
    }
    match (config, map) {
        (Some(c), Some(m)) => Ok((c, m, lines.collect())),
        _ => Err(ReportError::format(what, "hash header lacks config_hash or map_hash")),
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &'static str, line: usize) -> Result<T, ReportError> {
    let raw = field.ok_or_else(|| ReportError::format(what, format!("line {line}: missing column")))?;
    raw.trim().parse().map_err(|_| ReportError::format(what, format!("line {line}: bad value `{raw}`")))
}

pub const SUMMARY_CSV_HEADER: &str = "map,mode,zone_kind,zone_size,seed,episodes,repeat,success,collision,timeout,success_rate";

/// One row per repeat followed by a `mean` row carrying the across-repeat statistics.
pub fn summary_csv(summary: &EvalSummary) -> String {
    let mut out = hash_header(&summary.config_hash, &summary.map_hash);
    out.push_str(SUMMARY_CSV_HEADER);
    out.push_str(",std_success_rate,stderr_success_rate,mean_return\n");
    let prefix = format!(
        "{},{},{},{},{},{}",
        summary.map,
        summary.mode,
        summary.zone_kind,
        fmt_float(summary.zone_size),
        summary.seed,
        summary.episodes_per_repeat
    );
    for (i, (c, rate)) in summary.repeats.iter().zip(&summary.success_rates).enumerate() {
        out.push_str(&format!("{prefix},{i},{},{},{},{},,,\n", c.success, c.collision, c.timeout, fmt_float(*rate)));
    }
    let p = summary.pooled();
    out.push_str(&format!(
        "{prefix},mean,{},{},{},{},{},{},{}\n",
        p.success,
        p.collision,
        p.timeout,
        fmt_float(summary.mean_success_rate),
        fmt_float(summary.std_success_rate),
        fmt_float(summary.stderr_success_rate),
        fmt_float(summary.mean_return)
    ));
    out
}

/// Writes a summary in the requested format, atomically.
pub fn emit_summary(summary: &EvalSummary, format: SummaryFormat, path: &Path) -> Result<(), ReportError> {
    let text = match format {
        SummaryFormat::Json => summary_json(summary),
        SummaryFormat::Csv => summary_csv(summary),
    };
    crate::eval::write_atomic(path, text.as_bytes()).map_err(|e| ReportError::io(path, e))
}

pub fn emit_matrix(matrix: &RegimeMatrix, format: SummaryFormat, path: &Path) -> Result<(), ReportError> {
    let text = match format {
        SummaryFormat::Json => matrix_json(matrix),
        SummaryFormat::Csv => matrix_csv(&matrix_rows(matrix), &matrix.config_hash, &matrix.map_hash),
    };
    crate::eval::write_atomic(path, text.as_bytes()).map_err(|e| ReportError::io(path, e))
}

/// Flat view of one matrix cell, the unit both the bar chart and its CSV twin work from.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub algorithm: String,
    pub seed: u64,
    pub train_size: f64,
    pub eval_size: f64,
    pub config_hash: String,
    /// `None` marks a hole.
    pub counts: Option<RepeatCounts>,
    pub mean_success_rate: f64,
    pub stderr_success_rate: f64,
}

impl MatrixRow {
    pub fn is_hole(&self) -> bool {
        self.counts.is_none()
    }

    fn from_cell(cell: &MatrixCell) -> Self {
        let (counts, mean, stderr) = match &cell.summary {
            Some(s) => (Some(s.pooled()), round_sig(s.mean_success_rate, 6), round_sig(s.stderr_success_rate, 6)),
            None => (None, f64::NAN, f64::NAN),
        };
        Self {
            algorithm: cell.algorithm.clone(),
            seed: cell.seed,
            train_size: round_sig(cell.train_size, 6),
            eval_size: round_sig(cell.eval_size, 6),
            config_hash: cell.config_hash.clone(),
            counts,
            mean_success_rate: mean,
            stderr_success_rate: stderr,
        }
    }
}

pub fn matrix_rows(matrix: &RegimeMatrix) -> Vec<MatrixRow> {
    matrix.cells.iter().map(MatrixRow::from_cell).collect()
}

pub const MATRIX_CSV_HEADER: &str =
    "algorithm,seed,train_size,eval_size,config_hash,success,collision,timeout,mean_success_rate,stderr_success_rate";

pub fn matrix_csv(rows: &[MatrixRow], config_hash: &str, map_hash: &str) -> String {
    let mut out = hash_header(config_hash, map_hash);
    out.push_str(MATRIX_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let counts = match r.counts {
            Some(c) => format!("{},{},{}", c.success, c.collision, c.timeout),
            None => ",,".into(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.algorithm,
            r.seed,
            fmt_float(r.train_size),
            fmt_float(r.eval_size),
            r.config_hash,
            counts,
            fmt_float(r.mean_success_rate),
            fmt_float(r.stderr_success_rate)
        ));
    }
    out
}

/// Parses [`matrix_csv`] output; returns the header hashes and the rows.
pub fn parse_matrix_csv(text: &str) -> Result<(String, String, Vec<MatrixRow>), ReportError> {
    const WHAT: &str = "matrix csv";
    let (config, map, lines) = split_hash_header(text, WHAT)?;
    let mut rows = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i == 0 {
            if *line != MATRIX_CSV_HEADER {
                return Err(ReportError::format(WHAT, "unexpected column header"));
            }
            continue;
        }
        let line_no = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(ReportError::format(WHAT, format!("line {line_no}: expected 10 columns, found {}", f.len())));
        }
        let counts = if f[5].is_empty() {
            None
        } else {
            Some(RepeatCounts {
                success: parse_field(Some(f[5]), WHAT, line_no)?,
                collision: parse_field(Some(f[6]), WHAT, line_no)?,
                timeout: parse_field(Some(f[7]), WHAT, line_no)?,
            })
        };
        rows.push(MatrixRow {
            algorithm: f[0].to_string(),
            seed: parse_field(Some(f[1]), WHAT, line_no)?,
            train_size: parse_field(Some(f[2]), WHAT, line_no)?,
            eval_size: parse_field(Some(f[3]), WHAT, line_no)?,
            config_hash: f[4].to_string(),
            counts,
            mean_success_rate: parse_field(Some(f[8]), WHAT, line_no)?,
            stderr_success_rate: parse_field(Some(f[9]), WHAT, line_no)?,
        });
    }
    Ok((config, map, rows))
}

pub const CURVE_CSV_HEADER: &str = "step,mean_reward,episodes";

pub fn curve_csv(curve: &[CurvePoint], config_hash: &str, map_hash: &str) -> String {
    let mut out = hash_header(config_hash, map_hash);
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for p in curve {
        out.push_str(&format!("{},{},{}\n", p.step, fmt_float(p.mean_reward), p.episodes));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub config_hash: String,
    pub map_hash: String,
    pub points: Vec<CurvePoint>,
}

pub fn parse_curve_csv(text: &str) -> Result<CurveFile, ReportError> {
    const WHAT: &str = "curve csv";
    let (config_hash, map_hash, lines) = split_hash_header(text, WHAT)?;
    if lines.first() != Some(&CURVE_CSV_HEADER) {
        return Err(ReportError::format(WHAT, "unexpected column header"));
    }
    let mut points = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let mut f = line.split(',');
        points.push(CurvePoint {
            step: parse_field(f.next(), WHAT, i + 2)?,
            mean_reward: parse_field(f.next(), WHAT, i + 2)?,
            episodes: parse_field(f.next(), WHAT, i + 2)?,
        });
    }
    Ok(CurveFile { config_hash, map_hash, points })
}

pub const PATHS_CSV_HEADER: &str = "repeat,episode,seed,outcome,episode_return,goal_x,goal_y,zones,step,x,y,theta";

/// One row per pose. Zones are `cx:cy:size` joined by `;`.
pub fn paths_csv(paths: &[PathTrace], config_hash: &str, map_hash: &str) -> String {
    let mut out = hash_header(config_hash, map_hash);
    out.push_str(PATHS_CSV_HEADER);
    out.push('\n');
    for t in paths {
        let zones =
            t.zones.iter().map(|z| format!("{}:{}:{}", fmt_float(z[0]), fmt_float(z[1]), fmt_float(z[2]))).collect::<Vec<_>>().join(";");
        let head = format!(
            "{},{},{},{},{},{},{},{}",
            t.repeat,
            t.episode,
            t.seed,
            t.outcome,
            fmt_float(t.episode_return),
            fmt_float(t.goal[0]),
            fmt_float(t.goal[1]),
            zones
        );
        for (step, p) in t.poses.iter().enumerate() {
            out.push_str(&format!("{head},{step},{},{},{}\n", fmt_float(p[0]), fmt_float(p[1]), fmt_float(p[2])));
        }
    }
    out
}

pub struct PathsFile {
    pub config_hash: String,
    pub map_hash: String,
    pub paths: Vec<PathTrace>,
}

pub fn parse_paths_csv(text: &str) -> Result<PathsFile, ReportError> {
    const WHAT: &str = "paths csv";
    let (config_hash, map_hash, lines) = split_hash_header(text, WHAT)?;
    if lines.first() != Some(&PATHS_CSV_HEADER) {
        return Err(ReportError::format(WHAT, "unexpected column header"));
    }
    let mut paths: Vec<PathTrace> = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(ReportError::format(WHAT, format!("line {n}: expected 12 columns, found {}", f.len())));
        }
        let repeat: usize = parse_field(Some(f[0]), WHAT, n)?;
        let episode: usize = parse_field(Some(f[1]), WHAT, n)?;
        let pose = [parse_field(Some(f[9]), WHAT, n)?, parse_field(Some(f[10]), WHAT, n)?, parse_field(Some(f[11]), WHAT, n)?];
        match paths.last_mut() {
            Some(t) if t.repeat == repeat && t.episode == episode => t.poses.push(pose),
            _ => {
                let mut zones = Vec::new();
                for z in f[7].split(';').filter(|z| !z.is_empty()) {
                    let mut parts = z.split(':');
                    zones.push([
                        parse_field(parts.next(), WHAT, n)?,
                        parse_field(parts.next(), WHAT, n)?,
                        parse_field(parts.next(), WHAT, n)?,
                    ]);
                }
                paths.push(PathTrace {
                    repeat,
                    episode,
                    seed: parse_field(Some(f[2]), WHAT, n)?,
                    goal: [parse_field(Some(f[5]), WHAT, n)?, parse_field(Some(f[6]), WHAT, n)?],
                    zones,
                    poses: vec![pose],
                    outcome: f[3].to_string(),
                    episode_return: parse_field(Some(f[4]), WHAT, n)?,
                });
            }
        }
    }
    Ok(PathsFile { config_hash, map_hash, paths })
}

/// Refuses mismatched provenance unless `force`, in which case it only warns.
pub fn check_hash(what: &'static str, expected: &str, found: &str, force: bool) -> Result<(), ReportError> {
    if expected == found {
        return Ok(());
    }
    if force {
        log::warn!("{what} hash mismatch ignored: expected {expected}, found {found}");
        return Ok(());
    }
    Err(ReportError::Mismatch { what, expected: expected.into(), found: found.into() })
}
