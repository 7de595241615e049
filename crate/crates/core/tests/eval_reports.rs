mod common;

use dnav_core::env::{EnvConfig, Observation, ObservationMode};
use dnav_core::eval::{
    evaluate, evaluate_size, lr_sweep, regime_sweep, train, EvalPolicy, EvalProtocol, EvalSummary, MatrixCell, RegimeMatrix,
    RepeatCounts, RunStore, SweepPlan, TrainRunConfig,
};
use dnav_core::report::{
    matrix_csv, matrix_json, matrix_rows, parse_matrix_csv, parse_matrix_json, parse_summary_json, plot_matrix, plot_paths,
    summary_csv, summary_json, ConfigError, MatrixRow, RunConfigFile, Viewport,
};
use dnav_core::rl::{Algorithm, RlError};
use dnav_core::world::{ActionCommand, ArenaMap, EpisodeState, Placement, Pose};
use dnav_core::SimRng;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use common::disc_collides;

/// Drops the robot onto the goal before every action.
struct Teleport;

impl EvalPolicy for Teleport {
    fn act(&mut self, _obs: &Observation, _state: &EpisodeState) -> Result<ActionCommand, RlError> {
        Ok(ActionCommand::new(0.0, 0.0))
    }

    fn reposition(&mut self, state: &mut EpisodeState) -> bool {
        let g = state.goal.position;
        state.robot = Pose::new(g.x, g.y, state.robot.theta);
        true
    }
}

struct RandomActions(SimRng);

impl EvalPolicy for RandomActions {
    fn act(&mut self, _obs: &Observation, _state: &EpisodeState) -> Result<ActionCommand, RlError> {
        Ok(ActionCommand::new(self.0.random(), self.0.random_range(-1.0..=1.0)))
    }
}

/// Proportional heading controller that reads the true state.
struct Steer;

impl EvalPolicy for Steer {
    fn act(&mut self, _obs: &Observation, state: &EpisodeState) -> Result<ActionCommand, RlError> {
        let r = state.robot;
        let g = state.goal.position;
        let bearing = (g.y - r.y).atan2(g.x - r.x);
        let mut err = bearing - r.theta;
        while err > std::f64::consts::PI {
            err -= 2.0 * std::f64::consts::PI;
        }
        while err < -std::f64::consts::PI {
            err += 2.0 * std::f64::consts::PI;
        }
        let linear = if err.abs() < 0.4 { 1.0 } else { 0.1 };
        Ok(ActionCommand::new(linear, (2.0 * err).clamp(-1.0, 1.0)))
    }
}

/// Episode `i` of each repeat ends in a goal for i < 87, a collision for i < 97, a timeout otherwise.
struct Scripted {
    episode: usize,
}

impl EvalPolicy for Scripted {
    fn act(&mut self, _obs: &Observation, _state: &EpisodeState) -> Result<ActionCommand, RlError> {
        Ok(ActionCommand::new(0.0, 0.0))
    }

    fn reposition(&mut self, state: &mut EpisodeState) -> bool {
        if state.step_index != 0 {
            return false;
        }
        let i = self.episode % 100;
        self.episode += 1;
        if i < 87 {
            let g = state.goal.position;
            state.robot = Pose::new(g.x, g.y, 0.0);
        } else if i < 97 {
            state.robot = Pose::new(0.1, 5.0, 0.0);
        }
        true
    }
}

fn lidar_env() -> EnvConfig {
    EnvConfig::new(ObservationMode::Lidar)
}

fn small_protocol(map: &str) -> EvalProtocol {
    EvalProtocol { episodes: 20, repeats: 3, map: map.into(), ..EvalProtocol::default() }
}

fn check_summary(s: &EvalSummary) {
    assert_eq!(s.repeats.len(), s.success_rates.len());
    for (counts, rate) in s.repeats.iter().zip(&s.success_rates) {
        assert_eq!(counts.total(), s.episodes_per_repeat);
        assert!((0.0..=1.0).contains(rate));
    }
    assert_eq!(s.returns.len(), s.episodes_per_repeat * s.repeats.len());
}

#[test]
fn teleporting_policy_always_succeeds() {
    let map = ArenaMap::empty_arena();
    let summaries = evaluate(&mut Teleport, &map, Some(&lidar_env()), &small_protocol("empty"), "t").unwrap();
    assert_eq!(summaries.len(), 4);
    assert_eq!(summaries[0].zone_size, 0.0);
    for s in &summaries {
        check_summary(s);
        assert_eq!(s.mean_success_rate, 1.0);
        assert_eq!(s.std_success_rate, 0.0);
    }
}

#[test]
fn random_policy_rarely_succeeds() {
    let map = ArenaMap::default_arena();
    let protocol = EvalProtocol { zone_sizes: vec![0.0], ..EvalProtocol::default() };
    let mut policy = RandomActions(SimRng::seed_from_u64(4));
    let s = &evaluate(&mut policy, &map, Some(&lidar_env()), &protocol, "r").unwrap()[0];
    check_summary(s);
    let pooled = s.pooled();
    assert_eq!(pooled.total(), 500);
    assert!(s.mean_success_rate < 0.2, "random success {}", s.mean_success_rate);
    assert!(pooled.collision + pooled.timeout > pooled.success);
}

#[test]
fn evaluation_is_bit_identical_and_traces_are_consistent() {
    let map = ArenaMap::default_arena();
    let protocol = small_protocol("default");
    let run = || evaluate(&mut Steer, &map, Some(&lidar_env()), &protocol, "s").unwrap();
    let a = run();
    assert_eq!(a, run());
    assert_eq!(summary_json(&a[2]), summary_json(&run()[2]));
    let mut outcomes = [0usize; 3];
    for s in &a {
        check_summary(s);
        assert_eq!(s.paths.len(), 60);
        for t in &s.paths {
            assert!(t.poses.len() >= 2 && t.poses.len() <= 51, "{} poses", t.poses.len());
            let last = t.poses.last().unwrap();
            let p = dnav_core::geom::Vec2::new(last[0], last[1]);
            let at_goal = p.distance(dnav_core::geom::Vec2::new(t.goal[0], t.goal[1])) <= 0.5;
            match t.outcome.as_str() {
                "goal" => {
                    assert!(at_goal);
                    outcomes[0] += 1;
                }
                "collision" => {
                    // the pose stays at the last free substep, at most 5 cm short of contact
                    assert!(!disc_collides(&map, p, 0.3) && disc_collides(&map, p, 0.3 + 0.05 + 1e-9));
                    outcomes[1] += 1;
                }
                "timeout" => {
                    assert_eq!(t.poses.len(), 51);
                    assert!(!at_goal && !disc_collides(&map, p, 0.3));
                    outcomes[2] += 1;
                }
                other => panic!("unknown outcome {other}"),
            }
        }
    }
    // the greedy controller succeeds often and hits boxes sometimes
    assert!(outcomes[0] > 0 && outcomes[1] > 0, "{outcomes:?}");
}

#[test]
fn successful_paths_cross_the_central_zone() {
    let map = ArenaMap::empty_arena();
    let protocol = EvalProtocol { goal: Some(Placement::StaticCenter), ..small_protocol("empty") };
    let summaries = evaluate(&mut Steer, &map, Some(&lidar_env()), &protocol, "c").unwrap();
    for s in summaries.iter().filter(|s| s.zone_size >= 3.0) {
        let mut successes = 0;
        for t in s.paths.iter().filter(|t| t.outcome == "goal") {
            successes += 1;
            let [cx, cy, size] = t.zones[0];
            assert_eq!((cx, cy, size), (5.0, 5.0, s.zone_size));
            let h = size / 2.0;
            assert!(t.poses.iter().any(|p| (p[0] - cx).abs() <= h && (p[1] - cy).abs() <= h));
        }
        assert!(successes > 0);
    }
}

#[test]
fn mode_mismatch_is_refused() {
    let map = ArenaMap::default_arena();
    let cfg = TrainRunConfig::new(Algorithm::Ppo, ObservationMode::Lidar);
    let policy = train(&TrainRunConfig { total_steps: 100, ..cfg }).unwrap().checkpoint.policy;
    let camera = EvalProtocol::default().env_config(ObservationMode::Camera, &map, 0.0, None);
    assert!(evaluate_size(&mut policy.clone(), &map, &camera, &EvalProtocol::default(), "x").is_err());
}

#[test]
fn summary_arithmetic_and_json_round_trip() {
    let map = ArenaMap::default_arena();
    let protocol = EvalProtocol { episodes: 100, repeats: 1, ..EvalProtocol::default() };
    let env = protocol.env_config(ObservationMode::Lidar, &map, 0.0, None);
    let s = evaluate_size(&mut Scripted { episode: 0 }, &map, &env, &protocol, "cfg").unwrap();
    assert_eq!(s.repeats, vec![RepeatCounts { success: 87, collision: 10, timeout: 3 }]);
    assert_eq!(s.success_rates, vec![0.87]);
    assert_eq!(s.mean_success_rate, 0.87);

    let json = summary_json(&s);
    assert!(json.contains("\"mean_success_rate\": 0.87,"));
    assert!(json.contains("\"config_hash\": \"cfg\""));
    assert!(json.contains(&format!("\"map_hash\": \"{}\"", map.hash())));
    assert_eq!(summary_json(&parse_summary_json(&json).unwrap()), json);

    let csv = summary_csv(&s);
    assert!(csv.starts_with(&format!("# config_hash=cfg map_hash={}\n", map.hash())));
    assert!(csv.lines().nth(2).unwrap().contains(",0,87,10,3,0.87,"), "{csv}");
}

fn row(algorithm: &str, train: f64, eval: f64, counts: Option<RepeatCounts>, mean: f64, stderr: f64) -> MatrixRow {
    MatrixRow {
        algorithm: algorithm.into(),
        seed: 0,
        train_size: train,
        eval_size: eval,
        config_hash: format!("{algorithm}-{train}"),
        counts,
        mean_success_rate: mean,
        stderr_success_rate: stderr,
    }
}

fn two_algorithm_rows(mean: impl Fn(usize) -> f64) -> Vec<MatrixRow> {
    let mut rows = Vec::new();
    for (a, alg) in ["ppo", "td3"].iter().enumerate() {
        for (e, eval) in [0.0, 3.0, 5.0, 7.0].iter().enumerate() {
            let m = mean(a * 4 + e);
            let success = (m * 100.0).round() as usize;
            rows.push(row(alg, 0.0, *eval, Some(RepeatCounts { success, collision: 100 - success, timeout: 0 }), m, 0.05));
        }
    }
    rows
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

fn attr(element: &str, name: &str) -> String {
    let key = format!(" {name}=\"");
    let start = element.find(&key).unwrap() + key.len();
    element[start..].split('"').next().unwrap().to_string()
}

#[test]
fn matrix_plot_draws_one_bar_per_cell() {
    let svg = plot_matrix(&two_algorithm_rows(|i| 0.1 * i as f64)).unwrap();
    assert_eq!(count(&svg, "<rect class=\"bar s"), 8);
    assert_eq!(count(&svg, "class=\"errbar\""), 8);
    assert_eq!(count(&svg, "class=\"bar hole"), 0);

    let flat = plot_matrix(&two_algorithm_rows(|_| 0.5)).unwrap();
    let heights: Vec<String> = flat.lines().filter(|l| l.starts_with("<rect class=\"bar s")).map(|l| attr(l, "height")).collect();
    assert_eq!(heights.len(), 8);
    assert!(heights.iter().all(|h| *h == heights[0]), "{heights:?}");
}

#[test]
fn matrix_csv_twin_reproduces_the_plot() {
    let rows = two_algorithm_rows(|i| (i as f64 * 0.37).fract());
    let csv = matrix_csv(&rows, "plan", "map");
    let (config, map, parsed) = parse_matrix_csv(&csv).unwrap();
    assert_eq!((config.as_str(), map.as_str()), ("plan", "map"));
    assert_eq!(plot_matrix(&parsed).unwrap(), plot_matrix(&rows).unwrap());
    assert_eq!(matrix_csv(&parsed, "plan", "map"), csv);
}

#[test]
fn matrix_holes_are_hatched() {
    let mut rows = two_algorithm_rows(|_| 0.6);
    for e in [0.0, 3.0, 5.0, 7.0] {
        rows.push(row("ppo", 3.0, e, None, f64::NAN, f64::NAN));
    }
    rows.push(row("td3", 3.0, 0.0, Some(RepeatCounts { success: 60, collision: 40, timeout: 0 }), 0.6, 0.0));
    let svg = plot_matrix(&rows).unwrap();
    assert_eq!(count(&svg, "class=\"bar hole"), 4);
    assert!(svg.contains("url(#hatch)"));
    let (_, _, parsed) = parse_matrix_csv(&matrix_csv(&rows, "p", "m")).unwrap();
    assert_eq!(parsed.iter().filter(|r| r.is_hole()).count(), 4);

    let only_holes = vec![row("ppo", 0.0, 0.0, None, f64::NAN, f64::NAN)];
    assert!(plot_matrix(&only_holes).is_err());
}

fn trace_summary(outcomes: &[&str], zone_kind: &str) -> EvalSummary {
    let paths = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| dnav_core::eval::PathTrace {
            repeat: 0,
            episode: i,
            seed: i as u64,
            goal: [8.0, 8.0],
            zones: vec![[5.0, 5.0, 3.0]],
            poses: vec![[1.0, 1.0, 0.0], [1.0 + 0.05 * i as f64, 2.0, 0.3]],
            outcome: o.to_string(),
            episode_return: 0.0,
        })
        .collect();
    let n = |k: &str| outcomes.iter().filter(|o| **o == k).count();
    EvalSummary {
        config_hash: "c".into(),
        map_hash: "m".into(),
        map: "default".into(),
        mode: if zone_kind == "camera-blackout" { "camera" } else { "lidar" }.into(),
        zone_kind: zone_kind.into(),
        zone_size: 3.0,
        seed: 0,
        episodes_per_repeat: outcomes.len(),
        repeats: vec![RepeatCounts { success: n("goal"), collision: n("collision"), timeout: n("timeout") }],
        success_rates: vec![n("goal") as f64 / outcomes.len() as f64],
        mean_success_rate: n("goal") as f64 / outcomes.len() as f64,
        std_success_rate: 0.0,
        stderr_success_rate: 0.0,
        mean_return: 0.0,
        returns: vec![0.0; outcomes.len()],
        paths,
    }
}

#[test]
fn path_plot_markers_follow_outcomes() {
    let map = ArenaMap::default_arena();
    let one = plot_paths(&trace_summary(&["goal"], "lidar-gauss"), &map);
    assert_eq!(count(&one, "class=\"marker marker-goal\""), 1);
    assert_eq!(count(&one, "<polyline"), 1);

    let mut outcomes = vec!["goal"; 49];
    outcomes.extend(vec!["collision"; 38]);
    outcomes.extend(vec!["timeout"; 13]);
    let svg = plot_paths(&trace_summary(&outcomes, "lidar-gauss"), &map);
    assert_eq!(count(&svg, "<polyline"), 100);
    assert_eq!(count(&svg, "class=\"marker marker-goal\""), 49);
    assert_eq!(count(&svg, "class=\"marker marker-collision\""), 38);
    assert_eq!(count(&svg, "class=\"marker marker-timeout\""), 13);
    assert!(svg.contains("success: 49") && svg.contains("collision: 38") && svg.contains("timeout: 13"));
    assert_eq!(svg, plot_paths(&trace_summary(&outcomes, "lidar-gauss"), &map));
}

#[test]
fn zone_colour_follows_the_sensor() {
    let map = ArenaMap::default_arena();
    let lidar = plot_paths(&trace_summary(&["goal"], "lidar-gauss"), &map);
    let camera = plot_paths(&trace_summary(&["goal"], "camera-blackout"), &map);
    assert!(lidar.contains("class=\"zone zone-lidar\"") && !lidar.contains("zone-camera"));
    assert!(camera.contains("class=\"zone zone-camera\"") && !camera.contains("zone-lidar"));
    assert!(lidar.contains(".zone{fill:#d62728"));
    assert!(camera.contains(".zone{fill:#1f77b4"));
    assert!(lidar.contains(".marker-goal,.legend-goal{fill:#2ca02c}"));
    assert!(lidar.contains(".marker-collision,.legend-collision{fill:#d62728}"));
}

#[test]
fn empty_summary_plots_an_empty_arena() {
    let svg = plot_paths(&trace_summary(&[], "lidar-gauss"), &ArenaMap::default_arena());
    assert!(svg.contains("no traces recorded"));
    assert_eq!(count(&svg, "<polyline"), 0);
}

#[test]
fn config_rejects_unknown_keys() {
    let err = RunConfigFile::parse("[train]\nalgorithm = td3\nlearning_rat = 0.1\n").unwrap_err();
    assert_eq!(err, ConfigError::UnknownKey { section: "train".into(), key: "learning_rat".into() });
    assert!(RunConfigFile::parse("[bogus]\n").is_err());
    let cfg = RunConfigFile::parse("[env]\nmode = camera\n[train]\nalgorithm = ppo\nsteps = 1000\n").unwrap();
    assert_eq!(cfg.train.goal, Placement::StaticCenter);
    assert_eq!(cfg.train.total_steps, 1000);
    assert_eq!(cfg.train.env_config().mode.zone_kind(), ObservationMode::Camera.zone_kind());
}

#[test]
fn smoke_training_writes_a_loadable_checkpoint_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainRunConfig { total_steps: 2000, curve_interval: 250, ..TrainRunConfig::new(Algorithm::Ppo, ObservationMode::Lidar) };
    let a = train(&cfg).unwrap();
    let b = train(&cfg).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.curve.len(), 8);
    let path = dir.path().join("smoke.dnav");
    dnav_core::rl::save_checkpoint(&a.checkpoint, &path).unwrap();
    let loaded = dnav_core::rl::load_checkpoint(&path).unwrap();
    loaded.validate(Some(&cfg.hash()), Some(&a.map_hash)).unwrap();
    assert_eq!(loaded.encode(), a.checkpoint.encode());
}

#[test]
fn regime_sweep_fills_and_resumes_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::new(dir.path());
    let base = TrainRunConfig { total_steps: 1000, ..TrainRunConfig::new(Algorithm::Ppo, ObservationMode::Lidar) };
    let plan = SweepPlan {
        base,
        algorithms: vec![Algorithm::Ppo],
        train_sizes: vec![0.0, 3.0],
        seeds: vec![0],
        protocol: EvalProtocol { episodes: 4, repeats: 2, ..EvalProtocol::default() },
    };
    let matrix = regime_sweep(&plan, Some(&store)).unwrap();
    assert!(matrix.is_complete());
    assert_eq!(matrix.cells.len(), 8);
    let runs: Vec<_> = std::fs::read_dir(store.root()).unwrap().collect();
    assert_eq!(runs.len(), 2);
    for job in plan.jobs() {
        let run = store.run_for(&job);
        assert!(run.is_trained());
        for size in [0.0, 3.0, 5.0, 7.0] {
            assert!(run.load_eval(size).unwrap().is_some());
        }
    }
    let summaries: Vec<&EvalSummary> = matrix.cells.iter().filter_map(|c| c.summary.as_ref()).collect();
    assert_eq!(summaries.len(), 8);

    // a second pass finds every cell on disk; modification times stay put
    let stamp = |size: f64| std::fs::metadata(store.run_for(&plan.jobs()[0]).eval_path(size)).unwrap().modified().unwrap();
    let ckpt = || std::fs::metadata(store.run_for(&plan.jobs()[1]).checkpoint_path()).unwrap().modified().unwrap();
    let (before, ckpt_before) = (stamp(5.0), ckpt());
    std::thread::sleep(std::time::Duration::from_millis(20));
    let again = regime_sweep(&plan, Some(&store)).unwrap();
    assert_eq!(again, matrix);
    assert_eq!(stamp(5.0), before);
    assert_eq!(ckpt(), ckpt_before);

    let rows = matrix_rows(&matrix);
    assert_eq!(rows.len(), 8);
    let json = matrix_json(&matrix);
    assert_eq!(matrix_json(&parse_matrix_json(&json).unwrap()), json);
    let (_, _, parsed) = parse_matrix_csv(&matrix_csv(&rows, &matrix.config_hash, &matrix.map_hash)).unwrap();
    assert_eq!(parsed.len(), 2 * 4);
}

#[test]
fn sweep_failures_become_holes() {
    let base = TrainRunConfig { total_steps: 500, ..TrainRunConfig::new(Algorithm::Ppo, ObservationMode::Lidar) };
    let mut matrix = RegimeMatrix {
        config_hash: "p".into(),
        map_hash: "m".into(),
        train_sizes: vec![0.0],
        eval_sizes: vec![0.0],
        cells: vec![MatrixCell {
            algorithm: "ppo".into(),
            seed: 0,
            train_size: 0.0,
            eval_size: 0.0,
            config_hash: base.hash(),
            summary: None,
            error: Some("diverged".into()),
        }],
    };
    assert!(!matrix.is_complete());
    assert_eq!(matrix.holes().count(), 1);
    matrix.cells[0].error = None;
    let json = matrix_json(&matrix);
    assert_eq!(parse_matrix_json(&json).unwrap(), matrix);
}

#[test]
fn single_learning_rate_is_its_own_best() {
    let base = TrainRunConfig { total_steps: 600, curve_interval: 100, ..TrainRunConfig::new(Algorithm::Ppo, ObservationMode::Lidar) };
    let report = lr_sweep(&base, &[0.003], None).unwrap();
    assert_eq!(report.best_rate, 0.003);
    assert_eq!(report.runs.len(), 1);
    assert!(lr_sweep(&base, &[], None).is_err());
}

fn config_file_strategy() -> impl Strategy<Value = RunConfigFile> {
    (
        prop_oneof![Just(Algorithm::Ppo), Just(Algorithm::Td3)],
        prop_oneof![Just(ObservationMode::Lidar), Just(ObservationMode::Camera)],
        (0.0f64..10.0, 1u64..10_000_000, any::<u64>(), 1e-6f64..0.1),
        (1usize..500, 1usize..10, prop::collection::vec(0.0f64..10.0, 1..5), any::<bool>()),
        (0.0f64..5.0, 8usize..128, prop::collection::vec(1usize..256, 0..4)),
    )
        .prop_map(|(alg, mode, (zone, steps, seed, lr), (episodes, repeats, sizes, csv), (sigma, width, hidden))| {
            let mut f = RunConfigFile::new(alg, mode);
            f.train.zone_size = zone;
            f.train.total_steps = steps;
            f.train.seed = seed;
            f.train.set_learning_rate(lr);
            f.train.perturbation.lidar_sigma = sigma;
            f.train.camera_width = width;
            f.train.ppo.hidden = hidden;
            f.eval.episodes = episodes;
            f.eval.repeats = repeats;
            f.eval.zone_sizes = sizes;
            if csv {
                f.report.format = dnav_core::report::SummaryFormat::Csv;
            }
            f
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(file in config_file_strategy()) {
        let text = file.to_canonical();
        let parsed = RunConfigFile::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &file);
        prop_assert_eq!(parsed.to_canonical(), text);
        prop_assert_eq!(parsed.hash(), file.hash());
    }

    #[test]
    fn viewport_is_affine_with_equal_axes(
        x0 in -50.0f64..50.0, y0 in -50.0f64..50.0, w in 0.1f64..100.0, h in 0.1f64..100.0,
        bw in 10.0f64..1000.0, bh in 10.0f64..1000.0, u in 0.0f64..=1.0, v in 0.0f64..=1.0,
    ) {
        let vp = Viewport::fit((x0, y0), (x0 + w, y0 + h), 5.0, 7.0, bw, bh);
        let (ax, ay) = vp.map(x0, y0);
        let (bx, by) = vp.map(x0 + w, y0 + h);
        let tol = 1e-9 * (1.0 + bw + bh);
        // equal scale on both axes, y flipped
        prop_assert!(((bx - ax) / w - (ay - by) / h).abs() < 1e-9 * (bx - ax) / w);
        // fits and touches the box on the tight axis
        prop_assert!(ax >= 5.0 - tol && bx <= 5.0 + bw + tol && by >= 7.0 - tol && ay <= 7.0 + bh + tol);
        prop_assert!((bx - ax - bw).abs() < tol || (ay - by - bh).abs() < tol);
        // affine: interpolation commutes with the map
        let (px, py) = vp.map(x0 + u * w, y0 + v * h);
        prop_assert!((px - (ax + u * (bx - ax))).abs() < tol && (py - (ay + v * (by - ay))).abs() < tol);
    }
}
