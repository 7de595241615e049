use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rand::SeedableRng;

use dnav_core::env::{EnvConfig, ObservationMode};
use dnav_core::eval::{
    evaluate_size, lr_sweep, regime_sweep, resolve_map, train_or_resume, write_atomic, RunDir, RunStore, SweepPlan,
};
use dnav_core::geom::Vec2;
use dnav_core::report::{
    self, check_hash, fmt_float, hash_header, plot_curve, plot_matrix, plot_paths, CurveSeries, RunConfigFile,
    SummaryFormat,
};
use dnav_core::rl::{load_checkpoint, Algorithm};
use dnav_core::sensors::{blackout_camera, perturb_lidar, raycast, render_fpv};
use dnav_core::world::{check_collision, ArenaMap, GoalSpec, Placement, Pose, GOAL_MARKER_DIAMETER};

use crate::{Cli, Command, GlobalOpts};

pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn load_config(opts: &GlobalOpts) -> Result<RunConfigFile> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfigFile::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfigFile::new(Algorithm::Ppo, ObservationMode::Lidar),
    };
    for o in &opts.overrides {
        cfg.apply_override(o).map_err(usage)?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Train => train(g),
        Command::Eval { run } => eval(g, run),
        Command::Sweep { algorithms, train_sizes, seeds } => sweep(g, algorithms, train_sizes, seeds),
        Command::LrSweep { rates } => lr(g, rates),
        Command::PlotPaths { summary, paths, map, output } => plot_paths_cmd(g, summary, paths.as_deref(), map.as_deref(), output.as_deref()),
        Command::PlotCurve { inputs, smoothing, output } => plot_curve_cmd(g, inputs, *smoothing, output.as_deref()),
        Command::PlotMatrix { matrix, output } => plot_matrix_cmd(g, matrix, output.as_deref()),
        Command::DumpFrame { x, y, theta, goal_x, goal_y, denied, output } => {
            dump_frame(g, Pose::new(*x, *y, *theta), goal_x.zip(*goal_y), *denied, output)
        }
        Command::ValidateMap { map } => validate_map(map),
    }
}

fn train(g: &GlobalOpts) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(seed) = g.seed {
        cfg.train.seed = seed;
    }
    let store = RunStore::new(&g.out_dir);
    let dir = store.run_for(&cfg.train);
    if g.force && dir.is_trained() {
        std::fs::remove_file(dir.curve_path()).with_context(|| format!("clearing {}", dir.path().display()))?;
    }
    let run = train_or_resume(&cfg.train, Some(&store))?;
    if let Some(last) = run.curve.last() {
        log::info!("final mean episode reward {:.3} after {} episodes", last.mean_reward, last.episodes);
    }
    println!("{}", dir.path().display());
    Ok(())
}

/// Accepts a run directory or a checkpoint inside one.
fn open_run(path: &Path) -> (RunDir, PathBuf) {
    if path.is_file() {
        let dir = path.parent().map(RunDir::open).unwrap_or_else(|| RunDir::open("."));
        (dir, path.to_path_buf())
    } else {
        let dir = RunDir::open(path);
        let ck = dir.checkpoint_path();
        (dir, ck)
    }
}

fn eval(g: &GlobalOpts, run: &Path) -> Result<()> {
    let cfg = load_config(g)?;
    let mut protocol = cfg.eval.clone();
    if let Some(seed) = g.seed {
        protocol.seed = seed;
    }
    let (dir, ck_path) = open_run(run);
    let checkpoint = load_checkpoint(&ck_path)?;
    let config_hash = checkpoint.meta.config_hash.clone();
    let base: EnvConfig = if dir.snapshot_path().is_file() {
        check_hash("config", &dir.config_hash(), &config_hash, g.force)?;
        let text = std::fs::read_to_string(dir.snapshot_path())?;
        RunConfigFile::parse(&text).map_err(|e| anyhow!("{}: {e}", dir.snapshot_path().display()))?.train.env_config()
    } else {
        log::warn!("{} has no config snapshot; using default sensor settings", dir.path().display());
        EnvConfig::new(checkpoint.observation_mode())
    };
    let map = resolve_map(&protocol.map)?;
    checkpoint.validate(Some(&config_hash), Some(map.hash()))?;
    let mode = checkpoint.observation_mode();
    for &size in &protocol.zone_sizes {
        let mut policy = checkpoint.policy.clone();
        let env = protocol.env_config(mode, &map, size, Some(&base));
        let summary = evaluate_size(&mut policy, &map, &env, &protocol, &config_hash)?;
        dir.save_eval(&summary)?;
        if cfg.report.format == SummaryFormat::Csv {
            let path = dir.path().join("eval").join(format!("{}.csv", fmt_float(size)));
            report::emit_summary(&summary, SummaryFormat::Csv, &path)?;
        }
        let c = summary.pooled();
        println!(
            "zone {}x{}: success {:.3} +/- {:.3} (stderr), {} goal / {} collision / {} timeout",
            fmt_float(size),
            fmt_float(size),
            summary.mean_success_rate,
            summary.stderr_success_rate,
            c.success,
            c.collision,
            c.timeout
        );
    }
    Ok(())
}

fn sweep(g: &GlobalOpts, algorithms: &[String], train_sizes: &[f64], seeds: &[u64]) -> Result<()> {
    let cfg = load_config(g)?;
    let algorithms = algorithms
        .iter()
        .map(|a| Algorithm::parse(a).ok_or_else(|| usage(format!("unknown algorithm `{a}`"))))
        .collect::<Result<Vec<_>>>()?;
    let seeds = if seeds.is_empty() { vec![g.seed.unwrap_or(cfg.train.seed)] } else { seeds.to_vec() };
    let plan = SweepPlan { base: cfg.train.clone(), algorithms, train_sizes: train_sizes.to_vec(), seeds, protocol: cfg.eval.clone() };
    plan.validate().map_err(usage)?;
    let store = RunStore::new(&g.out_dir);
    let matrix = regime_sweep(&plan, Some(&store))?;
    let dir = g.out_dir.join("sweeps").join(&matrix.config_hash);
    report::emit_matrix(&matrix, SummaryFormat::Json, &dir.join("matrix.json"))?;
    report::emit_matrix(&matrix, SummaryFormat::Csv, &dir.join("matrix.csv"))?;
    println!("{}", dir.display());
    let holes: Vec<_> = matrix.holes().collect();
    if !holes.is_empty() {
        for h in &holes {
            log::error!(
                "hole: {} train {} eval {}: {}",
                h.algorithm,
                h.train_size,
                h.eval_size,
                h.error.as_deref().unwrap_or("unknown error")
            );
        }
        return Err(anyhow!("{} of {} cells failed", holes.len(), matrix.cells.len()).into());
    }
    Ok(())
}

fn lr(g: &GlobalOpts, rates: &[f64]) -> Result<()> {
    let mut cfg = load_config(g)?;
    if let Some(seed) = g.seed {
        cfg.train.seed = seed;
    }
    let store = RunStore::new(&g.out_dir);
    let sweep = lr_sweep(&cfg.train, rates, Some(&store))?;
    let key = format!("{}|{}", cfg.train.hash(), rates.iter().map(|r| fmt_float(*r)).collect::<Vec<_>>().join(","));
    let sweep_hash = &sha_hex(key.as_bytes());
    let map = resolve_map(&cfg.train.map)?;
    let dir = g.out_dir.join("lr-sweeps").join(sweep_hash);
    let mut csv = hash_header(sweep_hash, map.hash());
    csv.push_str("learning_rate,final_reward,best,config_hash\n");
    for r in &sweep.runs {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(r.learning_rate),
            fmt_float(r.final_reward),
            r.learning_rate == sweep.best_rate,
            r.config_hash
        ));
    }
    write_atomic(&dir.join("report.csv"), csv.as_bytes())?;
    let series: Vec<CurveSeries> = sweep
        .runs
        .iter()
        .map(|r| CurveSeries {
            label: format!("lr {}", fmt_float(r.learning_rate)),
            points: r.curve.iter().map(|p| (p.step as f64, p.mean_reward)).collect(),
        })
        .collect();
    write_atomic(&dir.join("curves.svg"), plot_curve(&series, cfg.report.smoothing).as_bytes())?;
    for r in &sweep.runs {
        println!("lr {:>10}: final reward {:.4}", fmt_float(r.learning_rate), r.final_reward);
    }
    println!("best learning rate {}", fmt_float(sweep.best_rate));
    println!("{}", dir.display());
    Ok(())
}

fn sha_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_map_arg(reference: &str) -> Result<ArenaMap> {
    match resolve_map(reference) {
        Ok(map) => Ok(map),
        Err(e) => {
            // `default.map` names the bundled asset when no such file exists
            let stem = Path::new(reference).file_stem().and_then(|s| s.to_str()).unwrap_or("");
            if !Path::new(reference).exists() {
                if let Some(map) = ArenaMap::builtin(stem) {
                    log::info!("{reference} not found; using the bundled {stem} map");
                    return Ok(map);
                }
            }
            Err(e.into())
        }
    }
}

fn plot_paths_cmd(g: &GlobalOpts, summary_path: &Path, paths: Option<&Path>, map: Option<&str>, output: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(summary_path).with_context(|| format!("reading {}", summary_path.display()))?;
    let mut summary = report::parse_summary_json(&text)?;
    let default_paths = summary_path
        .parent()
        .and_then(Path::parent)
        .zip(summary_path.file_stem())
        .map(|(run, stem)| run.join("paths").join(stem).with_extension("csv"));
    let trace_file = paths.map(Path::to_path_buf).or(default_paths.filter(|p| p.is_file()));
    if let Some(p) = trace_file {
        let file = report::parse_paths_csv(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?;
        check_hash("config", &summary.config_hash, &file.config_hash, g.force)?;
        check_hash("map", &summary.map_hash, &file.map_hash, g.force)?;
        summary.paths = file.paths;
    }
    let map = load_map_arg(map.unwrap_or(&summary.map))?;
    check_hash("map", &summary.map_hash, map.hash(), g.force)?;
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| summary_path.with_extension("svg"));
    write_atomic(&out, plot_paths(&summary, &map).as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

fn plot_curve_cmd(g: &GlobalOpts, inputs: &[PathBuf], smoothing: Option<usize>, output: Option<&Path>) -> Result<()> {
    let smoothing = match smoothing {
        Some(s) => s,
        None => load_config(g)?.report.smoothing,
    };
    let mut series = Vec::new();
    for input in inputs {
        let curve = if input.is_dir() {
            let dir = RunDir::open(input);
            let curve = dir.read_curve()?;
            check_hash("config", &dir.config_hash(), &curve.config_hash, g.force)?;
            curve
        } else {
            report::parse_curve_csv(&std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?)?
        };
        series.push(CurveSeries {
            label: curve.config_hash.chars().take(10).collect(),
            points: curve.points.iter().map(|p| (p.step as f64, p.mean_reward)).collect(),
        });
    }
    let out = match output {
        Some(o) => o.to_path_buf(),
        None if inputs.len() == 1 && inputs[0].is_dir() => inputs[0].join("curve.svg"),
        None => g.out_dir.join("curves.svg"),
    };
    write_atomic(&out, plot_curve(&series, smoothing).as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

fn plot_matrix_cmd(g: &GlobalOpts, input: &Path, output: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let (config_hash, map_hash, rows) = if input.extension().is_some_and(|e| e == "csv") {
        report::parse_matrix_csv(&text)?
    } else {
        let matrix = report::parse_matrix_json(&text)?;
        for cell in &matrix.cells {
            if let Some(s) = &cell.summary {
                check_hash("config", &cell.config_hash, &s.config_hash, g.force)?;
                check_hash("map", &matrix.map_hash, &s.map_hash, g.force)?;
            }
        }
        let rows = report::matrix_rows(&matrix);
        (matrix.config_hash, matrix.map_hash, rows)
    };
    let svg = plot_matrix(&rows)?;
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("svg"));
    write_atomic(&out, svg.as_bytes())?;
    let twin = out.with_extension("csv");
    write_atomic(&twin, report::matrix_csv(&rows, &config_hash, &map_hash).as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

fn dump_frame(g: &GlobalOpts, pose: Pose, goal: Option<(f64, f64)>, denied: bool, output: &Path) -> Result<()> {
    let cfg = load_config(g)?;
    let map = load_map_arg(&cfg.train.map)?;
    let env = cfg.train.env_config();
    if check_collision(&pose, &map, env.episode.robot_radius) {
        log::warn!("pose ({}, {}) intersects an obstacle or wall", pose.x, pose.y);
    }
    let center = map.bounds.center();
    let (gx, gy) = goal.unwrap_or((center.x, center.y));
    let goal = GoalSpec {
        position: Vec2::new(gx, gy),
        reach_radius: env.episode.goal_radius,
        placement: Placement::StaticCenter,
        marker_diameter: GOAL_MARKER_DIAMETER,
    };
    let frame = blackout_camera(&render_fpv(&pose, &map, &goal, &env.camera), denied);
    if let Some(parent) = output.parent() {
        std::fs::create_dir_all(parent)?;
    }
    frame.write_png(output).with_context(|| format!("writing {}", output.display()))?;
    let mut rng = dnav_core::SimRng::seed_from_u64(g.seed.unwrap_or(0));
    let scan = perturb_lidar(&raycast(&pose, &map, &env.lidar), denied, &env.perturbation, &mut rng);
    println!("{}", scan.to_csv_row());
    log::info!("wrote {}x{} frame to {}", frame.width, frame.height, output.display());
    Ok(())
}

fn validate_map(reference: &str) -> Result<()> {
    let map = load_map_arg(reference)?;
    println!(
        "{}: {} obstacles in a {} x {} m arena, sha256 {}",
        map.name,
        map.obstacles.len(),
        fmt_float(map.bounds.width()),
        fmt_float(map.bounds.height()),
        map.hash()
    );
    Ok(())
}
