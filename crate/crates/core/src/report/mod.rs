//! Configuration files, summaries and SVG plots.

mod config;
mod plots;
mod summary;
mod svg;

pub use config::{train_config_hash, train_snapshot, ConfigError, ReportOptions, RunConfigFile, SummaryFormat};
pub use plots::{plot_curve, plot_matrix, plot_paths, smooth, CurveSeries, Viewport};
pub use summary::{
    check_hash, curve_csv, emit_matrix, emit_summary, fmt_float, hash_header, matrix_csv, matrix_json, matrix_rows,
    parse_curve_csv, parse_matrix_csv, parse_matrix_json, parse_paths_csv, parse_summary_json, paths_csv, round_sig,
    split_hash_header, summary_csv, summary_json, to_canonical_json, CurveFile, MatrixRow, PathsFile, ReportError,
};
