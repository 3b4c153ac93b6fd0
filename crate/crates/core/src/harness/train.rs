//! The self-play training loop and its on-disk artifacts.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::io::write_atomic;
use super::matches::{with_threads, SeededMatchRunner};
use crate::error::{Error, Result};
use crate::learner::{trajectory_in, Reinforce};
use crate::rirrps::{play_episode, Player};
use crate::seed::{self, tags};
use crate::selfplay::{GateEvent, Menagerie, SelfPlay, META_SIMS};
use crate::TabularSoftmaxPolicy;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointInfo {
    pub index: usize,
    pub episode: u64,
    pub file: String,
    pub menagerie_size: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub wall: Duration,
    /// Meta-solver (PSRO only).
    pub solver: Duration,
    /// Meta-game matrix extension (PSRO only).
    pub update: Duration,
}

impl Timing {
    pub fn solver_pct(&self) -> f64 {
        pct(self.solver, self.wall)
    }

    pub fn update_pct(&self) -> f64 {
        pct(self.update, self.wall)
    }
}

fn pct(part: Duration, whole: Duration) -> f64 {
    if whole.is_zero() {
        0.0
    } else {
        (100.0 * part.as_secs_f64() / whole.as_secs_f64()).clamp(0.0, 100.0)
    }
}

/// Everything a run produces, in memory.
#[derive(Debug)]
pub struct RunRecord {
    pub checkpoints: Vec<(CheckpointInfo, TabularSoftmaxPolicy)>,
    /// One line per episode: episode id then joint-action indices.
    pub trajectories: String,
    /// One line per episode: `episode opponent_stamp won`.
    pub opponents: String,
    pub gates: Vec<GateEvent>,
    pub final_menagerie: Menagerie<Arc<TabularSoftmaxPolicy>>,
    pub timing: Timing,
    pub episodes_run: u64,
    /// Set when the run stopped early.
    pub error: Option<Error>,
}

/// Runs the self-play loop: sample opponent, play, learn, curate, and freeze
/// the live policy at evenly spaced episode counts.
pub fn simulate(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    with_threads(config.threads, || simulate_inner(config))?
}

fn simulate_inner(config: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let mut learner = Reinforce::new(TabularSoftmaxPolicy::for_env(&config.env), config.learner);
    let mut sp = SelfPlay::new(config.scheme, Arc::new(learner.policy.snapshot()))?
        .with_snapshot_every(config.snapshot_every);
    let runner = SeededMatchRunner {
        env: config.env,
        sims: META_SIMS,
        seed: config.seed,
    };
    let marks = config.checkpoint_episodes();
    let mut next_mark = 0;
    let mut checkpoints = Vec::with_capacity(marks.len());
    let mut trajectories = String::new();
    let mut opponents = String::new();
    let mut error = None;
    let mut episodes_run = 0;

    for e in 0..config.episodes {
        let mut rng = seed::rng(config.seed, &[tags::EPISODE, e]);
        let idx = sp.sample_opponent(&mut rng);
        let opp = sp.opponent(idx);
        let stamp = opp.stamp;
        let opp_policy = Arc::clone(&opp.policy);
        let result = play_episode(config.env, &learner.policy, &*opp_policy, &mut rng);
        learner.update(&trajectory_in(&result.seat_trajectory(Player::One)))?;
        let won = result.winner == Player::One;
        trajectories.push_str(&result.log_line(e));
        trajectories.push('\n');
        let _ = writeln!(opponents, "{e} {stamp} {}", u8::from(won));

        let curated = sp.curate(&Arc::new(learner.policy.snapshot()), e, won, &runner);
        episodes_run = e + 1;
        if let Err(err) = curated {
            error = Some(err);
            break;
        }
        if next_mark < marks.len() && marks[next_mark] == e + 1 {
            next_mark += 1;
            let info = CheckpointInfo {
                index: next_mark,
                episode: e + 1,
                file: format!("snapshots/{next_mark:03}.policy"),
                menagerie_size: sp.menagerie().len(),
            };
            checkpoints.push((info, learner.policy.snapshot()));
        }
    }

    let (solver, update) = sp
        .meta()
        .map_or((Duration::ZERO, Duration::ZERO), |m| (m.solver_time, m.update_time));
    Ok(RunRecord {
        checkpoints,
        trajectories,
        opponents,
        gates: sp.gate_events().to_vec(),
        final_menagerie: sp.menagerie().clone(),
        timing: Timing {
            wall: start.elapsed(),
            solver,
            update,
        },
        episodes_run,
        error,
    })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    seed: u64,
    scheme: String,
    config_hash: String,
    config: serde_json::Value,
    episodes_run: u64,
    checkpoints: Vec<&'a CheckpointInfo>,
    gate_events: &'a [GateEvent],
    final_menagerie_size: usize,
    aborted: Option<String>,
}

/// Runs training and writes `snapshots/NNN.policy`, `manifest.json`,
/// `trajectories.log` and `opponents.log` under `config.out`. An aborted run
/// still writes what it has, flags the manifest, and returns
/// [`Error::Aborted`].
pub fn train(config: &ExperimentConfig) -> Result<RunRecord> {
    let record = simulate(config)?;
    let out = &config.out;
    for (info, policy) in &record.checkpoints {
        write_atomic(&out.join(&info.file), policy.to_text().as_bytes())?;
    }
    write_atomic(&out.join("trajectories.log"), record.trajectories.as_bytes())?;
    write_atomic(&out.join("opponents.log"), record.opponents.as_bytes())?;
    if config.save_menagerie {
        let owned = record.final_menagerie.map(|p| (**p).clone());
        owned.save(&out.join("menagerie"), &config.scheme)?;
    }
    let manifest = Manifest {
        seed: config.seed,
        scheme: config.scheme.label(),
        config_hash: config.content_hash(),
        config: config.result_settings(),
        episodes_run: record.episodes_run,
        checkpoints: record.checkpoints.iter().map(|(i, _)| i).collect(),
        gate_events: &record.gates,
        final_menagerie_size: record.final_menagerie.len(),
        aborted: record.error.as_ref().map(|e| e.to_string()),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&out.join("manifest.json"), json.as_bytes())?;
    match &record.error {
        Some(e) => Err(Error::Aborted(e.to_string())),
        None => Ok(record),
    }
}
