//! `dnav`: train, evaluate and plot sensor-denied navigation policies.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dnav", version, about = "Sensor-denied 2D navigation benchmark")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Run configuration file (`[env]`, `[train]`, `[eval]`, `[report]` sections).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set train.steps=20000`. Repeatable.
    #[arg(long = "set", short = 's', value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Training seed for `train`/`sweep`/`lr-sweep`, evaluation root seed for `eval`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, env = "DNAV_OUT", default_value = "out", global = true)]
    pub out_dir: PathBuf,
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Log machine-readable JSON lines to stderr.
    #[arg(long, global = true)]
    pub log_json: bool,
    /// Proceed despite mismatched config or map hashes.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy into `<out-dir>/runs/<config-hash>/`.
    Train,
    /// Evaluate a trained run on every configured zone size.
    Eval {
        /// Run directory or checkpoint file.
        run: PathBuf,
    },
    /// Train and evaluate the train-zone by eval-zone regime matrix.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "ppo")]
        algorithms: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,3,5,7")]
        train_sizes: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// One training run per learning rate; reports the best.
    LrSweep {
        #[arg(long, value_delimiter = ',', default_value = "0.03,0.003,0.0003,0.00003")]
        rates: Vec<f64>,
    },
    /// SVG of every evaluation trace.
    PlotPaths {
        /// `eval/<size>.json` of a run.
        summary: PathBuf,
        /// Trace CSV; defaults to the run's `paths/<size>.csv`.
        #[arg(long)]
        paths: Option<PathBuf>,
        /// `default`, `empty` or a map file; defaults to the summary's map.
        #[arg(long)]
        map: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// SVG of one or more learning curves.
    PlotCurve {
        /// Run directories or `curve.csv` files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        smoothing: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Grouped success-rate bars from a regime matrix, plus its CSV twin.
    PlotMatrix {
        /// `matrix.json` or `matrix.csv`.
        matrix: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Render one camera frame to PNG and print the Lidar scan.
    DumpFrame {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        goal_x: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        goal_y: Option<f64>,
        /// Black out the frame and perturb the scan as inside a zone.
        #[arg(long)]
        denied: bool,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Parse and validate a map file.
    ValidateMap { map: String },
}

struct StderrLogger {
    json: bool,
}

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let mut err = std::io::stderr().lock();
        let _ = if self.json {
            let line = serde_json::json!({
                "level": record.level().as_str().to_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(err, "{line}")
        } else {
            writeln!(err, "[{}] {}", record.level().as_str().to_lowercase(), record.args())
        };
    }

    fn flush(&self) {}
}

fn init_logging(opts: &GlobalOpts) {
    let level = if opts.quiet {
        log::LevelFilter::Warn
    } else {
        match opts.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    let logger = Box::leak(Box::new(StderrLogger { json: opts.log_json }));
    if log::set_logger(logger).is_ok() {
        log::set_max_level(level);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(&cli.global);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(commands::CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
