//! Train-zone by eval-zone regime matrices and learning-rate sweeps.
//!
//! With a [`RunStore`] every training run and evaluation is persisted under its
//! config hash, and an interrupted sweep resumes by skipping finished cells.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::runs::{RunError, RunStore, StoredRun};
use crate::eval::{evaluate_size, resolve_map, train_with, CurvePoint, EvalProtocol, EvalSummary, TrainError, TrainRunConfig};
use crate::hash_hex;
use crate::report::{fmt_float, train_snapshot};
use crate::rl::Algorithm;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Config(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Trains `config`, or loads the finished run from `store` when its hash is already there.
pub fn train_or_resume(config: &TrainRunConfig, store: Option<&RunStore>) -> Result<StoredRun, SweepError> {
    let Some(store) = store else {
        return Ok(train_with(config, &mut |_| {})?.into());
    };
    let dir = store.run_for(config);
    if dir.is_trained() {
        match dir.load_training() {
            Ok(run) => {
                log::info!("reusing finished run {}", dir.path().display());
                return Ok(run);
            }
            Err(e) => log::warn!("retraining {}: {e}", dir.path().display()),
        }
    }
    let mut save_err = None;
    let out = train_with(config, &mut |ck| {
        if let Err(e) = dir.save_checkpoint(ck) {
            save_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = save_err {
        return Err(e.into());
    }
    let run = StoredRun::from(out);
    dir.save_training(config, &run)?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Template; algorithm, zone size and seed are overwritten per job.
    pub base: TrainRunConfig,
    pub algorithms: Vec<Algorithm>,
    pub train_sizes: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Its `zone_sizes` are the evaluation sizes.
    pub protocol: EvalProtocol,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.algorithms.is_empty() || self.train_sizes.is_empty() || self.seeds.is_empty() || self.protocol.zone_sizes.is_empty() {
            return Err(SweepError::Config("algorithms, train sizes, seeds and eval sizes must all be non-empty".into()));
        }
        self.protocol.validate().map_err(SweepError::Config)?;
        for job in self.jobs() {
            job.validate().map_err(SweepError::Config)?;
        }
        Ok(())
    }

    /// Training configs in matrix order: algorithm, then seed, then train size.
    pub fn jobs(&self) -> Vec<TrainRunConfig> {
        let mut jobs = Vec::new();
        for &algorithm in &self.algorithms {
            for &seed in &self.seeds {
                for &size in &self.train_sizes {
                    let mut cfg = self.base.clone();
                    cfg.algorithm = algorithm;
                    cfg.seed = seed;
                    cfg.zone_size = size;
                    jobs.push(cfg);
                }
            }
        }
        jobs
    }

    /// Hash over every job config and the evaluation protocol.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for job in self.jobs() {
            h.update(train_snapshot(&job).as_bytes());
        }
        let p = &self.protocol;
        let sizes = p.zone_sizes.iter().map(|s| fmt_float(*s)).collect::<Vec<_>>().join(",");
        h.update(
            format!(
                "[eval]\nepisodes={}\nrepeats={}\nsizes={sizes}\nmap={}\nseed={}\nplacement={:?}\ngoal={:?}\n",
                p.episodes, p.repeats, p.map, p.seed, p.zone_placement, p.goal
            )
            .as_bytes(),
        );
        hash_hex(&h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub algorithm: String,
    pub seed: u64,
    pub train_size: f64,
    pub eval_size: f64,
    /// Hash of the training config that produced the policy.
    pub config_hash: String,
    /// `None` marks a hole; traces are kept in the run directory, not here.
    pub summary: Option<EvalSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMatrix {
    pub config_hash: String,
    pub map_hash: String,
    pub train_sizes: Vec<f64>,
    pub eval_sizes: Vec<f64>,
    pub cells: Vec<MatrixCell>,
}

impl RegimeMatrix {
    pub fn cell(&self, algorithm: Algorithm, seed: u64, train_size: f64, eval_size: f64) -> Option<&MatrixCell> {
        self.cells.iter().find(|c| {
            c.algorithm == algorithm.as_str() && c.seed == seed && c.train_size == train_size && c.eval_size == eval_size
        })
    }

    pub fn holes(&self) -> impl Iterator<Item = &MatrixCell> {
        self.cells.iter().filter(|c| c.summary.is_none())
    }

    pub fn is_complete(&self) -> bool {
        self.holes().next().is_none()
    }
}

fn matches_protocol(summary: &EvalSummary, protocol: &EvalProtocol, config_hash: &str, map_hash: &str) -> bool {
    summary.config_hash == config_hash
        && summary.map_hash == map_hash
        && summary.episodes_per_repeat == protocol.episodes
        && summary.repeats.len() == protocol.repeats
        && summary.seed == protocol.seed
}

/// Trains one policy per (algorithm, seed, train size) and evaluates it on every eval size.
///
/// Training or evaluation failures become holes carrying the error text.
pub fn regime_sweep(plan: &SweepPlan, store: Option<&RunStore>) -> Result<RegimeMatrix, SweepError> {
    plan.validate()?;
    let map = resolve_map(&plan.protocol.map).map_err(|e| SweepError::Config(e.to_string()))?;
    let mut cells = Vec::new();
    for job in plan.jobs() {
        let config_hash = job.hash();
        let hole = |eval_size: f64, error: String| MatrixCell {
            algorithm: job.algorithm.as_str().into(),
            seed: job.seed,
            train_size: job.zone_size,
            eval_size,
            config_hash: config_hash.clone(),
            summary: None,
            error: Some(error),
        };
        let run = match train_or_resume(&job, store) {
            Ok(run) => run,
            Err(e) => {
                log::error!("training {} zone {} failed: {e}", job.algorithm.as_str(), job.zone_size);
                cells.extend(plan.protocol.zone_sizes.iter().map(|&s| hole(s, e.to_string())));
                continue;
            }
        };
        let dir = store.map(|s| s.run(&config_hash));
        let base_env = job.env_config();
        for &eval_size in &plan.protocol.zone_sizes {
            let cached = match &dir {
                Some(d) => d.load_eval(eval_size).ok().flatten(),
                None => None,
            }
            .filter(|s| matches_protocol(s, &plan.protocol, &config_hash, map.hash()));
            let summary = match cached {
                Some(s) => Ok(s),
                None => {
                    let mut policy = run.checkpoint.policy.clone();
                    let env = plan.protocol.env_config(job.mode, &map, eval_size, Some(&base_env));
                    evaluate_size(&mut policy, &map, &env, &plan.protocol, &config_hash)
                        .map_err(|e| e.to_string())
                        .and_then(|s| match &dir {
                            Some(d) => d.save_eval(&s).map(|_| s).map_err(|e| e.to_string()),
                            None => Ok(s),
                        })
                }
            };
            match summary {
                Ok(mut s) => {
                    s.paths.clear();
                    cells.push(MatrixCell {
                        algorithm: job.algorithm.as_str().into(),
                        seed: job.seed,
                        train_size: job.zone_size,
                        eval_size,
                        config_hash: config_hash.clone(),
                        summary: Some(s),
                        error: None,
                    });
                }
                Err(e) => cells.push(hole(eval_size, e)),
            }
        }
    }
    Ok(RegimeMatrix {
        config_hash: plan.hash(),
        map_hash: map.hash().to_string(),
        train_sizes: plan.train_sizes.clone(),
        eval_sizes: plan.protocol.zone_sizes.clone(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrSweepRun {
    pub learning_rate: f64,
    pub config_hash: String,
    pub curve: Vec<CurvePoint>,
    /// Mean of the curve points in the final 10% of training steps.
    pub final_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrSweepReport {
    pub algorithm: Algorithm,
    pub runs: Vec<LrSweepRun>,
    pub best_rate: f64,
}

/// Mean reward over curve points with `step >= 0.9 * total_steps`; NaN points are ignored.
pub fn final_mean_reward(curve: &[CurvePoint], total_steps: u64) -> f64 {
    let cutoff = total_steps as f64 * 0.9;
    let tail: Vec<f64> =
        curve.iter().filter(|p| p.step as f64 >= cutoff && p.mean_reward.is_finite()).map(|p| p.mean_reward).collect();
    if tail.is_empty() {
        f64::NEG_INFINITY
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// The rate whose run has the highest final reward; earlier candidates win ties.
pub fn best_learning_rate(runs: &[LrSweepRun]) -> Option<f64> {
    let mut best: Option<&LrSweepRun> = None;
    for run in runs {
        if best.is_none_or(|b| run.final_reward > b.final_reward) {
            best = Some(run);
        }
    }
    best.map(|r| r.learning_rate)
}

/// One training run per candidate rate, all from the same seed.
pub fn lr_sweep(base: &TrainRunConfig, rates: &[f64], store: Option<&RunStore>) -> Result<LrSweepReport, SweepError> {
    if rates.is_empty() {
        return Err(SweepError::Config("no candidate learning rates".into()));
    }
    if let Some(bad) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(SweepError::Config(format!("learning rate {bad} is not positive")));
    }
    let mut runs = Vec::with_capacity(rates.len());
    for &rate in rates {
        let mut cfg = base.clone();
        cfg.set_learning_rate(rate);
        let run = train_or_resume(&cfg, store)?;
        let final_reward = final_mean_reward(&run.curve, cfg.total_steps);
        log::info!("{} lr {rate}: final reward {final_reward:.4}", cfg.algorithm.as_str());
        runs.push(LrSweepRun { learning_rate: rate, config_hash: run.config_hash, curve: run.curve, final_reward });
    }
    let best_rate = best_learning_rate(&runs).expect("at least one run");
    Ok(LrSweepReport { algorithm: base.algorithm, runs, best_rate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(step: u64, r: f64) -> CurvePoint {
        CurvePoint { step, mean_reward: r, episodes: 0 }
    }

    #[test]
    fn final_window_is_last_tenth() {
        let curve = vec![point(100, 5.0), point(899, 5.0), point(900, 1.0), point(1000, 2.0), point(1000, f64::NAN)];
        assert_eq!(final_mean_reward(&curve, 1000), 1.5);
        assert_eq!(final_mean_reward(&[], 1000), f64::NEG_INFINITY);
    }

    #[test]
    fn best_rate_prefers_highest_then_first() {
        let run = |lr: f64, r: f64| LrSweepRun { learning_rate: lr, config_hash: String::new(), curve: vec![], final_reward: r };
        assert_eq!(best_learning_rate(&[run(0.1, -1.0), run(0.01, 0.5), run(0.001, 0.5)]), Some(0.01));
        assert_eq!(best_learning_rate(&[run(0.3, -2.0)]), Some(0.3));
        assert_eq!(best_learning_rate(&[]), None);
    }

    #[test]
    fn jobs_cover_the_grid() {
        let plan = SweepPlan {
            base: TrainRunConfig::new(Algorithm::Ppo, crate::env::ObservationMode::Lidar),
            algorithms: vec![Algorithm::Ppo, Algorithm::Td3],
            train_sizes: vec![0.0, 3.0],
            seeds: vec![1],
            protocol: EvalProtocol::default(),
        };
        let jobs = plan.jobs();
        assert_eq!(jobs.len(), 4);
        assert_eq!(jobs[1].zone_size, 3.0);
        assert_eq!(jobs[2].algorithm, Algorithm::Td3);
        let hashes: std::collections::HashSet<_> = jobs.iter().map(|j| j.hash()).collect();
        assert_eq!(hashes.len(), 4);
    }
}
