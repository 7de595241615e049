use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dnav(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnav"))
        .current_dir(cwd)
        .env_remove("DNAV_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets").join(name)
}

const SMALL_PPO: &str = "[env]\nmode = lidar\n[train]\nalgorithm = ppo\nsteps = 1500\ncurve_interval = 500\n[eval]\nepisodes = 4\nrepeats = 2\n";

#[test]
fn validate_map_counts_obstacles() {
    let dir = tempfile::tempdir().unwrap();
    let committed = dnav(dir.path(), &["validate-map", asset("default.map").to_str().unwrap()]);
    assert!(committed.status.success(), "{}", stderr(&committed));
    assert!(stdout(&committed).contains(": 4 obstacles in a 10 x 10 m arena"), "{}", stdout(&committed));

    let bundled = dnav(dir.path(), &["validate-map", "default.map"]);
    assert_eq!(bundled.status.code(), Some(0));
    assert_eq!(stdout(&bundled), stdout(&committed));

    let empty = dnav(dir.path(), &["validate-map", asset("empty.map").to_str().unwrap()]);
    assert!(stdout(&empty).contains(": 0 obstacles"));
}

#[test]
fn invalid_map_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.map");
    std::fs::write(&bad, "bounds 10 10\nbox 9.5 5 2 1\n").unwrap();
    let out = dnav(dir.path(), &["validate-map", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dnav(dir.path(), &["train", "--no-such-flag"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("Usage"), "{}", stderr(&unknown));

    let no_command = dnav(dir.path(), &[]);
    assert_eq!(no_command.status.code(), Some(2));

    let bad_key = dnav(dir.path(), &["train", "--set", "train.learning_rat=0.1"]);
    assert_eq!(bad_key.status.code(), Some(2));
    assert!(stderr(&bad_key).contains("unknown key `train.learning_rat`"));

    let bad_config = dir.path().join("bad.cfg");
    std::fs::write(&bad_config, "[train]\nalgorithm = sac\n").unwrap();
    let out = dnav(dir.path(), &["train", "--config", bad_config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(dnav(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn train_eval_and_plot_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("ppo_lidar.cfg"), SMALL_PPO).unwrap();
    let out = dnav(root, &["train", "--config", "ppo_lidar.cfg", "--seed", "1", "--out-dir", "out", "-q"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let run = root.join(stdout(&out).trim());
    assert!(run.starts_with(root.join("out/runs")));
    for file in ["config.snapshot", "curve.csv", "checkpoint.dnav"] {
        assert!(run.join(file).is_file(), "missing {file}");
    }
    let snapshot = std::fs::read_to_string(run.join("config.snapshot")).unwrap();
    assert!(snapshot.contains("seed = 1\n") && snapshot.contains("steps = 1500\n"));

    let run_arg = run.to_str().unwrap();
    let eval = dnav(root, &["eval", run_arg, "--config", "ppo_lidar.cfg", "--set", "eval.sizes=0,3", "-q"]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    assert_eq!(stdout(&eval).lines().count(), 2);
    assert!(stdout(&eval).starts_with("zone 0x0: success "));
    for file in ["eval/0.json", "eval/3.json", "paths/0.csv", "paths/3.csv"] {
        assert!(run.join(file).is_file(), "missing {file}");
    }

    let summary = run.join("eval/3.json");
    let plot = dnav(root, &["plot-paths", summary.to_str().unwrap(), "-o", "paths.svg"]);
    assert!(plot.status.success(), "{}", stderr(&plot));
    let svg = std::fs::read_to_string(root.join("paths.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);
    assert!(svg.contains("class=\"zone zone-lidar\""));

    let curve = dnav(root, &["plot-curve", run_arg]);
    assert!(curve.status.success(), "{}", stderr(&curve));
    assert!(std::fs::read_to_string(run.join("curve.svg")).unwrap().starts_with("<svg"));

    // retraining the same config reuses the run directory
    let again = dnav(root, &["train", "--config", "ppo_lidar.cfg", "--seed", "1", "--out-dir", "out", "-q"]);
    assert_eq!(stdout(&again), stdout(&out));
}

#[test]
fn plots_refuse_mismatched_hashes_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("ppo_lidar.cfg"), SMALL_PPO).unwrap();
    let out = dnav(root, &["train", "--config", "ppo_lidar.cfg", "--out-dir", "out", "-q"]);
    let run = root.join(stdout(&out).trim());
    let eval = dnav(root, &["eval", run.to_str().unwrap(), "--config", "ppo_lidar.cfg", "--set", "eval.sizes=5", "-q"]);
    assert!(eval.status.success(), "{}", stderr(&eval));

    let traces = run.join("paths/5.csv");
    let text = std::fs::read_to_string(&traces).unwrap();
    let (header, body) = text.split_once('\n').unwrap();
    let tampered = format!("# config_hash={} {}\n{body}", "0".repeat(64), header.split_whitespace().nth(2).unwrap());
    std::fs::write(&traces, tampered).unwrap();

    let summary = run.join("eval/5.json");
    let refused = dnav(root, &["plot-paths", summary.to_str().unwrap()]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(stderr(&refused).contains("mismatch"), "{}", stderr(&refused));
    assert!(!run.join("eval/5.svg").exists());

    let forced = dnav(root, &["plot-paths", summary.to_str().unwrap(), "--force", "-q"]);
    assert!(forced.status.success(), "{}", stderr(&forced));
    assert!(run.join("eval/5.svg").is_file());
}

#[test]
fn sweep_writes_a_plottable_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("ppo_lidar.cfg"), SMALL_PPO).unwrap();
    let args = ["sweep", "--config", "ppo_lidar.cfg", "--train-sizes", "0,3", "--set", "train.steps=600", "--out-dir", "out", "-q"];
    let out = dnav(root, &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let sweep = root.join(stdout(&out).trim());
    let matrix_csv = std::fs::read_to_string(sweep.join("matrix.csv")).unwrap();
    assert_eq!(matrix_csv.lines().count(), 2 + 2 * 4);

    let plot = dnav(root, &["plot-matrix", sweep.join("matrix.json").to_str().unwrap()]);
    assert!(plot.status.success(), "{}", stderr(&plot));
    let svg = std::fs::read_to_string(sweep.join("matrix.svg")).unwrap();
    assert_eq!(svg.matches("<rect class=\"bar s").count(), 8);
    assert_eq!(std::fs::read_to_string(sweep.join("matrix.csv")).unwrap(), matrix_csv);

    // the csv twin renders the same chart
    let twin = dnav(root, &["plot-matrix", sweep.join("matrix.csv").to_str().unwrap(), "-o", "twin.svg"]);
    assert!(twin.status.success(), "{}", stderr(&twin));
    assert_eq!(std::fs::read_to_string(root.join("twin.svg")).unwrap(), svg);

    let resumed = dnav(root, &args);
    assert_eq!(stdout(&resumed), stdout(&out));
}

#[test]
fn lr_sweep_reports_a_single_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let out = dnav(root, &["lr-sweep", "--rates", "0.003", "--set", "train.steps=500", "--out-dir", "out", "-q"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("best learning rate 0.003"));
}

#[test]
fn dump_frame_writes_a_png() {
    let dir = tempfile::tempdir().unwrap();
    let out = dnav(dir.path(), &["dump-frame", "--x", "1", "--y", "1", "--theta", "0.78", "-o", "f.png", "-q"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let bytes = std::fs::read(dir.path().join("f.png")).unwrap();
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    let scan: Vec<f64> = stdout(&out).trim().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(scan.len(), 20);
    assert!(scan.iter().all(|r| (0.0..=10.0).contains(r)));

    let denied = dnav(dir.path(), &["dump-frame", "--x", "1", "--y", "1", "--theta", "0.78", "--denied", "-o", "d.png", "-q"]);
    assert!(denied.status.success());
    assert_ne!(stdout(&denied), stdout(&out));
}
