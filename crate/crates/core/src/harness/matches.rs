//! Head-to-head simulation: populations, winrate estimation, and the match
//! runner PSRO uses to extend its meta-game.

use std::path::Path;
use std::sync::Arc;

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metagame::CrossWinrateMatrix;
use crate::rirrps::{play_episode, Action, FixedAgent, Player, Policy, RirRpsConfig};
use crate::seed::{self, tags};
use crate::selfplay::MatchRunner;
use crate::{Matrix, TabularSoftmaxPolicy, WinrateMatrix};

#[derive(Debug, Clone)]
pub enum Agent {
    Fixed(FixedAgent),
    Tabular(Arc<TabularSoftmaxPolicy>),
}

impl Policy for Agent {
    fn act(&self, observation: usize, rng: &mut dyn RngCore) -> Action {
        match self {
            Agent::Fixed(a) => a.act(observation, rng),
            Agent::Tabular(p) => p.act(observation, rng),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    pub labels: Vec<String>,
    pub agents: Vec<Agent>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn fixed(kinds: &[FixedAgent]) -> Self {
        Self {
            labels: kinds.iter().map(|k| k.name().to_string()).collect(),
            agents: kinds.iter().map(|&k| Agent::Fixed(k)).collect(),
        }
    }

    pub fn tabular(labels: Vec<String>, policies: Vec<TabularSoftmaxPolicy>) -> Self {
        Self {
            labels,
            agents: policies.into_iter().map(|p| Agent::Tabular(Arc::new(p))).collect(),
        }
    }

    /// Loads `snapshots/*.policy` from a training output directory, in file
    /// name order.
    pub fn load_run(dir: &Path) -> Result<Self> {
        let snap_dir = dir.join("snapshots");
        let mut files: Vec<_> = std::fs::read_dir(&snap_dir)
            .map_err(|e| Error::io(&snap_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "policy"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::parse(&snap_dir, "no snapshot files"));
        }
        let mut labels = Vec::with_capacity(files.len());
        let mut policies = Vec::with_capacity(files.len());
        for f in files {
            let text = super::io::read_text(&f)?;
            policies.push(TabularSoftmaxPolicy::from_text(&text).map_err(|m| Error::parse(&f, m))?);
            labels.push(f.file_stem().unwrap_or_default().to_string_lossy().into_owned());
        }
        Ok(Self::tabular(labels, policies))
    }
}

/// Win fraction of `a` in seat 1 over `sims` episodes seeded by
/// `(seed, tag, i, j, s)`.
pub fn head_to_head(
    env: RirRpsConfig,
    a: &dyn Policy,
    b: &dyn Policy,
    sims: u32,
    seed: u64,
    tag: u64,
    (i, j): (usize, usize),
) -> f64 {
    let wins = (0..sims)
        .filter(|&s| {
            let mut rng = seed::rng(seed, &[tag, i as u64, j as u64, u64::from(s)]);
            play_episode(env, a, b, &mut rng).winner == Player::One
        })
        .count();
    wins as f64 / f64::from(sims)
}

/// Runs `f` on a pool with `threads` workers (0: the global pool).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Symmetric winrate matrix: one block of `sims` episodes per unordered pair
/// `i < j`, the lower-indexed policy in seat 1.
pub fn estimate_winrate_matrix(
    pop: &Population,
    env: RirRpsConfig,
    sims: u32,
    seed: u64,
) -> Result<WinrateMatrix> {
    if pop.is_empty() {
        return Err(Error::Config("empty population".into()));
    }
    if sims == 0 {
        return Err(Error::Config("sims_per_entry must be positive".into()));
    }
    let n = pop.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let rates: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| head_to_head(env, &pop.agents[i], &pop.agents[j], sims, seed, tags::MATCH, (i, j)))
        .collect();
    let mut m = Matrix::filled(n, n, 0.5);
    for (&(i, j), &w) in pairs.iter().zip(&rates) {
        m[(i, j)] = w;
        m[(j, i)] = 1.0 - w;
    }
    WinrateMatrix::new(pop.labels.clone(), m, sims)
}

/// Cross-population winrates: every `(i, j)` cell simulated with population
/// 1's policy in seat 1.
pub fn estimate_cross_winrate_matrix(
    rows: &Population,
    cols: &Population,
    env: RirRpsConfig,
    sims: u32,
    seed: u64,
) -> Result<CrossWinrateMatrix<f64>> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Config("empty population".into()));
    }
    if sims == 0 {
        return Err(Error::Config("sims_per_entry must be positive".into()));
    }
    let (r, c) = (rows.len(), cols.len());
    let rates: Vec<f64> = (0..r * c)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / c, k % c);
            head_to_head(env, &rows.agents[i], &cols.agents[j], sims, seed, tags::CROSS_MATCH, (i, j))
        })
        .collect();
    let m = Matrix::from_fn(r, c, |i, j| rates[i * c + j]);
    CrossWinrateMatrix::new(rows.labels.clone(), cols.labels.clone(), m, sims)
}

/// Match runner for PSRO meta-game extension.
pub struct SeededMatchRunner {
    pub env: RirRpsConfig,
    pub sims: u32,
    pub seed: u64,
}

impl MatchRunner<Arc<TabularSoftmaxPolicy>> for SeededMatchRunner {
    fn winrate(&self, a: &Arc<TabularSoftmaxPolicy>, b: &Arc<TabularSoftmaxPolicy>, pair: (usize, usize)) -> f64 {
        head_to_head(self.env, &**a, &**b, self.sims, self.seed, tags::META_MATCH, pair)
    }

    fn sims(&self) -> u32 {
        self.sims
    }
}
