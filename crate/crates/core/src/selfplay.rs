//! Generalized self-play: a menagerie of frozen policies, an opponent
//! sampling distribution over it, and a curator that decides what enters and
//! leaves. Four schemes: naive, δ-uniform, δ-limit-uniform and PSRO.

use std::collections::VecDeque;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::io::write_atomic;
use crate::metagame::winrate_to_evaluation;
use crate::nash;
use crate::{MixedStrategy, TabularSoftmaxPolicy, WinrateMatrix};

pub const PSRO_DEFAULT_THRESHOLD: f64 = 0.72;
pub const PSRO_DEFAULT_MATCHES: usize = 50;
pub const META_SIMS: u32 = 30;
const LIMIT_UNIFORM_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelfPlayScheme {
    Naive,
    DeltaUniform { delta: f64 },
    DeltaLimitUniform { delta: f64 },
    Psro { threshold: f64, n_matches: usize },
}

impl SelfPlayScheme {
    pub fn psro_default() -> Self {
        SelfPlayScheme::Psro {
            threshold: PSRO_DEFAULT_THRESHOLD,
            n_matches: PSRO_DEFAULT_MATCHES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelfPlayScheme::Naive => Ok(()),
            SelfPlayScheme::DeltaUniform { delta } | SelfPlayScheme::DeltaLimitUniform { delta } => {
                if (0.0..=1.0).contains(&delta) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("delta {delta} outside [0, 1]")))
                }
            }
            SelfPlayScheme::Psro {
                threshold,
                n_matches,
            } => {
                // thresholds above 1 are allowed: they simply never fire
                if !(threshold >= 0.0) || !threshold.is_finite() {
                    return Err(Error::Config(format!("psro threshold {threshold} invalid")));
                }
                if n_matches == 0 {
                    return Err(Error::Config("psro n_matches must be positive".into()));
                }
                Ok(())
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            SelfPlayScheme::Naive => "naive".into(),
            SelfPlayScheme::DeltaUniform { delta } => format!("delta_uniform({delta})"),
            SelfPlayScheme::DeltaLimitUniform { delta } => format!("delta_limit_uniform({delta})"),
            SelfPlayScheme::Psro {
                threshold,
                n_matches,
            } => format!("psro({threshold},{n_matches})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MenagerieEntry<P> {
    pub policy: P,
    /// Episode count at insertion; the initial policy has stamp 0.
    pub stamp: u64,
    expected_count: f64,
}

impl<P> MenagerieEntry<P> {
    /// Sum of the per-episode probabilities of sampling this entry so far
    /// (tracked for δ-limit-uniform only).
    pub fn expected_count(&self) -> f64 {
        self.expected_count
    }
}

/// Ordered set of frozen policies, oldest first.
#[derive(Debug, Clone)]
pub struct Menagerie<P> {
    entries: VecDeque<MenagerieEntry<P>>,
    history: u64,
}

impl<P> Menagerie<P> {
    pub fn new(initial: P) -> Self {
        let mut entries = VecDeque::new();
        entries.push_back(MenagerieEntry {
            policy: initial,
            stamp: 0,
            expected_count: 0.0,
        });
        Self { entries, history: 1 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of policies ever inserted, including dropped ones.
    pub fn history(&self) -> u64 {
        self.history
    }

    pub fn get(&self, i: usize) -> &MenagerieEntry<P> {
        &self.entries[i]
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &MenagerieEntry<P>> {
        self.entries.iter()
    }

    pub fn stamps(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.stamp).collect()
    }

    /// Appends a policy. Stamps must strictly increase.
    pub fn push(&mut self, policy: P, stamp: u64) {
        let last = self.entries.back().map(|e| e.stamp);
        assert!(
            last.is_none_or(|s| stamp > s),
            "stamp {stamp} not after {last:?}"
        );
        self.entries.push_back(MenagerieEntry {
            policy,
            stamp,
            expected_count: 0.0,
        });
        self.history += 1;
    }

    /// Same stamps and counts with each policy transformed.
    pub fn map<Q>(&self, f: impl Fn(&P) -> Q) -> Menagerie<Q> {
        Menagerie {
            entries: self
                .entries
                .iter()
                .map(|e| MenagerieEntry {
                    policy: f(&e.policy),
                    stamp: e.stamp,
                    expected_count: e.expected_count,
                })
                .collect(),
            history: self.history,
        }
    }

    fn replace_all(&mut self, policy: P, stamp: u64) {
        self.entries.clear();
        self.entries.push_back(MenagerieEntry {
            policy,
            stamp,
            expected_count: 0.0,
        });
        self.history += 1;
    }

    /// Size of the δ-window: the newest `⌈(1-δ)·history⌉` entries, at least one.
    pub fn window_len(&self, delta: f64) -> usize {
        let raw = ((1.0 - delta) * self.history as f64 - 1e-9).ceil();
        (raw.max(1.0) as usize).min(self.entries.len())
    }

    fn drop_outside(&mut self, delta: f64) {
        let keep = self.window_len(delta);
        while self.entries.len() > keep {
            self.entries.pop_front();
        }
    }
}

impl Menagerie<TabularSoftmaxPolicy> {
    /// One `stamp_NNNNNNNN.policy` file per entry plus `index.json`.
    pub fn save(&self, dir: &Path, scheme: &SelfPlayScheme) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::with_capacity(self.len());
        for e in &self.entries {
            let name = format!("stamp_{:08}.policy", e.stamp);
            let body = format!("# stamp={}\n{}", e.stamp, e.policy.to_text());
            write_atomic(&dir.join(&name), body.as_bytes())?;
            files.push(IndexEntry {
                stamp: e.stamp,
                file: name,
            });
        }
        let index = MenagerieIndex {
            scheme: *scheme,
            history: self.history,
            entries: files,
        };
        write_atomic(&dir.join("index.json"), serde_json::to_string_pretty(&index)?.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<(Self, SelfPlayScheme)> {
        let path = dir.join("index.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let index: MenagerieIndex = serde_json::from_str(&text)?;
        let mut entries = VecDeque::new();
        for ie in &index.entries {
            let p = dir.join(&ie.file);
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let stamp_line = format!("# stamp={}", ie.stamp);
            if text.lines().next() != Some(stamp_line.as_str()) {
                return Err(Error::parse(&p, "stamp header does not match index"));
            }
            let policy = TabularSoftmaxPolicy::from_text(&text).map_err(|m| Error::parse(&p, m))?;
            entries.push_back(MenagerieEntry {
                policy,
                stamp: ie.stamp,
                expected_count: 0.0,
            });
        }
        if entries.is_empty() {
            return Err(Error::parse(&path, "empty menagerie"));
        }
        Ok((
            Self {
                entries,
                history: index.history,
            },
            index.scheme,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    stamp: u64,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct MenagerieIndex {
    scheme: SelfPlayScheme,
    history: u64,
    entries: Vec<IndexEntry>,
}

/// Plays evaluation matches between two frozen policies.
pub trait MatchRunner<P>: Sync {
    /// Win fraction of `a` (seat 1) against `b`; `pair` identifies the
    /// menagerie indices for seed derivation.
    fn winrate(&self, a: &P, b: &P, pair: (usize, usize)) -> f64;

    fn sims(&self) -> u32;
}

/// PSRO bookkeeping over the menagerie.
#[derive(Debug, Clone)]
pub struct MetaGameState {
    pub winrate: WinrateMatrix,
    pub meta_strategy: MixedStrategy,
    outcomes: VecDeque<bool>,
    n_matches: usize,
    /// Cumulative time in the meta-solver.
    pub solver_time: Duration,
    /// Cumulative time extending the winrate matrix.
    pub update_time: Duration,
    pub meta_steps: usize,
}

impl MetaGameState {
    fn new(n_matches: usize, sims: u32) -> Result<Self> {
        Ok(Self {
            winrate: WinrateMatrix::new(vec!["0".into()], crate::Matrix::filled(1, 1, 0.5), sims)?,
            meta_strategy: MixedStrategy::pure(1, 0),
            outcomes: VecDeque::with_capacity(n_matches),
            n_matches,
            solver_time: Duration::ZERO,
            update_time: Duration::ZERO,
            meta_steps: 0,
        })
    }

    pub fn recent_outcomes(&self) -> impl Iterator<Item = bool> + '_ {
        self.outcomes.iter().copied()
    }

    fn record(&mut self, won: bool) {
        if self.outcomes.len() == self.n_matches {
            self.outcomes.pop_front();
        }
        self.outcomes.push_back(won);
    }
}

/// Extends the meta-game by the newest menagerie entry and re-solves it.
pub fn psro_meta_step<P: Sync>(
    state: &mut MetaGameState,
    menagerie: &Menagerie<P>,
    runner: &dyn MatchRunner<P>,
) -> Result<()> {
    let t0 = Instant::now();
    while state.winrate.len() < menagerie.len() {
        let k = state.winrate.len();
        let new = &menagerie.get(k).policy;
        let vs_existing: Vec<f64> = (0..k)
            .into_par_iter()
            .map(|i| runner.winrate(&menagerie.get(i).policy, new, (i, k)))
            .collect();
        state
            .winrate
            .extend(menagerie.get(k).stamp.to_string(), &vs_existing)?;
    }
    state.update_time += t0.elapsed();

    let t1 = Instant::now();
    let eval = winrate_to_evaluation(&state.winrate)?;
    let solved = nash::maxent_nash(&eval, nash::DEFAULT_TOL);
    state.solver_time += t1.elapsed();
    state.meta_strategy = solved?.strategy;
    state.meta_steps += 1;
    Ok(())
}

/// A PSRO gate decision, loggable and re-checkable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateEvent {
    pub episode: u64,
    pub wins: usize,
    pub outcomes: usize,
    pub menagerie_size: usize,
}

/// Scheme state plus the menagerie it curates.
#[derive(Debug, Clone)]
pub struct SelfPlay<P> {
    scheme: SelfPlayScheme,
    menagerie: Menagerie<P>,
    meta: Option<MetaGameState>,
    snapshot_every: u64,
    gates: Vec<GateEvent>,
}

impl<P: Clone + Sync> SelfPlay<P> {
    pub fn new(scheme: SelfPlayScheme, initial: P) -> Result<Self> {
        scheme.validate()?;
        let meta = match scheme {
            SelfPlayScheme::Psro { n_matches, .. } => Some(MetaGameState::new(n_matches, META_SIMS)?),
            _ => None,
        };
        Ok(Self {
            scheme,
            menagerie: Menagerie::new(initial),
            meta,
            snapshot_every: 1,
            gates: Vec::new(),
        })
    }

    /// δ-schemes append only on episodes divisible by `every` (default 1).
    pub fn with_snapshot_every(mut self, every: u64) -> Self {
        self.snapshot_every = every.max(1);
        self
    }

    pub fn scheme(&self) -> &SelfPlayScheme {
        &self.scheme
    }

    pub fn menagerie(&self) -> &Menagerie<P> {
        &self.menagerie
    }

    pub fn meta(&self) -> Option<&MetaGameState> {
        self.meta.as_ref()
    }

    pub fn gate_events(&self) -> &[GateEvent] {
        &self.gates
    }

    /// Sampling probability per menagerie entry for the next draw.
    pub fn distribution(&self) -> Vec<f64> {
        let n = self.menagerie.len();
        let mut p = vec![0.0; n];
        match self.scheme {
            SelfPlayScheme::Naive => p[n - 1] = 1.0,
            SelfPlayScheme::DeltaUniform { delta } => {
                let w = self.menagerie.window_len(delta);
                for v in &mut p[n - w..] {
                    *v = 1.0 / w as f64;
                }
            }
            SelfPlayScheme::DeltaLimitUniform { delta } => {
                let w = self.menagerie.window_len(delta);
                let window: Vec<f64> = self.menagerie.entries.range(n - w..).map(|e| e.expected_count).collect();
                let top = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = window.iter().map(|c| (top - c).max(0.0) + LIMIT_UNIFORM_EPS).collect();
                let total: f64 = weights.iter().sum();
                for (v, wk) in p[n - w..].iter_mut().zip(&weights) {
                    *v = wk / total;
                }
            }
            SelfPlayScheme::Psro { .. } => {
                let meta = self.meta.as_ref().expect("psro state");
                p.copy_from_slice(meta.meta_strategy.probs());
            }
        }
        p
    }

    /// Draws one opponent; returns its menagerie index.
    pub fn sample_opponent<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        assert!(!self.menagerie.is_empty(), "menagerie is never empty");
        let p = self.distribution();
        if let SelfPlayScheme::DeltaLimitUniform { .. } = self.scheme {
            for (e, pk) in self.menagerie.entries.iter_mut().zip(&p) {
                e.expected_count += pk;
            }
        }
        match self.scheme {
            SelfPlayScheme::Naive => p.len() - 1,
            SelfPlayScheme::DeltaUniform { delta } => {
                let n = self.menagerie.len();
                let w = self.menagerie.window_len(delta);
                rng.gen_range(n - w..n)
            }
            _ => draw(&p, rng),
        }
    }

    pub fn opponent(&self, index: usize) -> &MenagerieEntry<P> {
        self.menagerie.get(index)
    }

    /// End-of-episode curation. `episode` is 0-based; a policy inserted after
    /// it gets stamp `episode + 1`. `won` is the live policy's result.
    pub fn curate(
        &mut self,
        live: &P,
        episode: u64,
        won: bool,
        runner: &dyn MatchRunner<P>,
    ) -> Result<Option<GateEvent>> {
        let stamp = episode + 1;
        match self.scheme {
            SelfPlayScheme::Naive => {
                self.menagerie.replace_all(live.clone(), stamp);
                Ok(None)
            }
            SelfPlayScheme::DeltaUniform { delta } | SelfPlayScheme::DeltaLimitUniform { delta } => {
                if stamp.is_multiple_of(self.snapshot_every) {
                    self.menagerie.push(live.clone(), stamp);
                    self.menagerie.drop_outside(delta);
                }
                Ok(None)
            }
            SelfPlayScheme::Psro {
                threshold,
                n_matches,
            } => {
                let meta = self.meta.as_mut().expect("psro state");
                meta.record(won);
                if meta.outcomes.len() < n_matches {
                    return Ok(None);
                }
                let wins = meta.outcomes.iter().filter(|&&w| w).count();
                if (wins as f64 / n_matches as f64) < threshold {
                    return Ok(None);
                }
                meta.outcomes.clear();
                self.menagerie.push(live.clone(), stamp);
                let event = GateEvent {
                    episode,
                    wins,
                    outcomes: n_matches,
                    menagerie_size: self.menagerie.len(),
                };
                self.gates.push(event.clone());
                let meta = self.meta.as_mut().expect("psro state");
                psro_meta_step(meta, &self.menagerie, runner)?;
                Ok(Some(event))
            }
        }
    }
}

fn draw<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        last = i;
        acc += pi;
        if u < acc {
            return i;
        }
    }
    last
}

/// `S_i = Σ_{k=i}^{n} 1/k`: expected number of times policy `i` (1-based) is
/// drawn over `n` episodes of δ=0 uniform self-play.
pub fn expected_sample_counts_delta0(i: usize, n: usize) -> Result<f64> {
    if i == 0 || i > n {
        return Err(Error::OutOfRange { index: i, max: n });
    }
    Ok((i..=n).rev().map(|k| 1.0 / k as f64).sum())
}
