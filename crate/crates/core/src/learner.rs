//! Tabular softmax policy over recall states, trained with REINFORCE and a
//! moving-average baseline.

use std::fmt::Write as _;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rirrps::{Action, Policy, RirRpsConfig};
use crate::scalar::Scalar;

pub const ACTIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig<T> {
    pub learning_rate: T,
    /// Discount for the per-round returns.
    pub discount: T,
    /// Decay of the moving-average return baseline.
    pub baseline_decay: T,
}

impl<T: Scalar> Default for LearnerConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::lit(0.05),
            discount: T::lit(0.99),
            baseline_decay: T::lit(0.9),
        }
    }
}

impl<T: Scalar> LearnerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero()) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if !(self.discount >= T::zero() && self.discount <= T::one()) {
            return Err(Error::Config("discount must be in [0, 1]".into()));
        }
        if !(self.baseline_decay >= T::zero() && self.baseline_decay <= T::one()) {
            return Err(Error::Config("baseline_decay must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One logit triple per observation index; temperature 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSoftmaxPolicy<T> {
    logits: Vec<[T; ACTIONS]>,
}

impl<T: Scalar> TabularSoftmaxPolicy<T> {
    /// All-zero logits: the uniform policy.
    pub fn uniform(num_states: usize) -> Self {
        Self {
            logits: vec![[T::zero(); ACTIONS]; num_states],
        }
    }

    pub fn for_env(config: &RirRpsConfig) -> Self {
        Self::uniform(config.num_states())
    }

    pub fn from_logits(logits: Vec<[T; ACTIONS]>) -> Self {
        Self { logits }
    }

    pub fn num_states(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self, state: usize) -> &[T; ACTIONS] {
        &self.logits[state]
    }

    pub fn logits_mut(&mut self, state: usize) -> &mut [T; ACTIONS] {
        &mut self.logits[state]
    }

    pub fn probs(&self, state: usize) -> [T; ACTIONS] {
        softmax(&self.logits[state])
    }

    /// `∇_logits log π(action | state) = onehot(action) - π(· | state)`.
    pub fn log_prob_gradient(&self, state: usize, action: Action) -> [T; ACTIONS] {
        let p = self.probs(state);
        let mut g = [T::zero(); ACTIONS];
        for (k, gk) in g.iter_mut().enumerate() {
            let own = if k == action.index() { T::one() } else { T::zero() };
            *gk = own - p[k];
        }
        g
    }

    /// Deep copy; the alias for a frozen menagerie entry.
    pub fn snapshot(&self) -> Self {
        self.clone()
    }

    pub fn restore(snapshot: &Self) -> Self {
        snapshot.clone()
    }

    /// Text format: a header comment, then `state l0 l1 l2` per line at full
    /// (shortest round-trip) precision.
    pub fn to_text(&self) -> String {
        let mut out = format!("# tabular-softmax states={}\n", self.logits.len());
        for (i, l) in self.logits.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", l[0], l[1], l[2]);
        }
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut logits = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 1 + ACTIONS {
                return Err(format!("line {}: expected 4 fields", ln + 1));
            }
            let idx: usize = fields[0]
                .parse()
                .map_err(|_| format!("line {}: bad state index", ln + 1))?;
            if idx != logits.len() {
                return Err(format!("line {}: state {idx} out of order", ln + 1));
            }
            let mut row = [T::zero(); ACTIONS];
            for (k, f) in fields[1..].iter().enumerate() {
                row[k] = f
                    .parse::<T>()
                    .map_err(|_| format!("line {}: bad logit {f:?}", ln + 1))?;
            }
            logits.push(row);
        }
        if logits.is_empty() {
            return Err("no states".into());
        }
        Ok(Self { logits })
    }
}

impl<T: Scalar> Policy for TabularSoftmaxPolicy<T> {
    fn act(&self, observation: usize, rng: &mut dyn RngCore) -> Action {
        let p = self.probs(observation);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, pk) in p.iter().enumerate().take(ACTIONS - 1) {
            acc += pk.to_f64_lossy();
            if u < acc {
                return Action::ALL[k];
            }
        }
        Action::ALL[ACTIONS - 1]
    }
}

pub fn softmax<T: Scalar>(logits: &[T; ACTIONS]) -> [T; ACTIONS] {
    let top = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut e = [T::zero(); ACTIONS];
    let mut total = T::zero();
    for (k, ek) in e.iter_mut().enumerate() {
        *ek = (logits[k] - top).exp();
        total += *ek;
    }
    for ek in e.iter_mut() {
        *ek /= total;
    }
    e
}

/// Discounted returns `G_t = Σ_{k>=t} γ^{k-t} r_k`.
pub fn discounted_returns<T: Scalar>(rewards: &[T], discount: T) -> Vec<T> {
    let mut out = vec![T::zero(); rewards.len()];
    let mut g = T::zero();
    for t in (0..rewards.len()).rev() {
        g = rewards[t] + discount * g;
        out[t] = g;
    }
    out
}

/// REINFORCE learner: the live training policy plus its baseline.
#[derive(Debug, Clone)]
pub struct Reinforce<T> {
    pub policy: TabularSoftmaxPolicy<T>,
    pub config: LearnerConfig<T>,
    pub baseline: T,
}

impl<T: Scalar> Reinforce<T> {
    pub fn new(policy: TabularSoftmaxPolicy<T>, config: LearnerConfig<T>) -> Self {
        Self {
            policy,
            config,
            baseline: T::zero(),
        }
    }

    /// Logit increments for one episode, all computed from the pre-update
    /// policy: `lr * (G_t - b) * (onehot(a_t) - π(·|s_t))` summed over visits.
    pub fn increments(&self, trajectory: &[(usize, Action, T)]) -> Result<Vec<(usize, [T; ACTIONS])>> {
        let n = self.policy.num_states();
        if let Some(&(s, _, _)) = trajectory.iter().find(|(s, _, _)| *s >= n) {
            return Err(Error::Trajectory(format!(
                "state {s} outside policy table of {n} states"
            )));
        }
        let rewards: Vec<T> = trajectory.iter().map(|&(_, _, r)| r).collect();
        let returns = discounted_returns(&rewards, self.config.discount);
        Ok(trajectory
            .iter()
            .zip(&returns)
            .map(|(&(s, a, _), &g)| {
                let scale = self.config.learning_rate * (g - self.baseline);
                let grad = self.policy.log_prob_gradient(s, a);
                (s, grad.map(|v| scale * v))
            })
            .collect())
    }

    /// Applies one policy-gradient step, then moves the baseline toward the
    /// episode return `G_0`.
    pub fn update(&mut self, trajectory: &[(usize, Action, T)]) -> Result<()> {
        let inc = self.increments(trajectory)?;
        for (s, d) in inc {
            let l = self.policy.logits_mut(s);
            for k in 0..ACTIONS {
                l[k] += d[k];
            }
        }
        let rewards: Vec<T> = trajectory.iter().map(|&(_, _, r)| r).collect();
        let g0 = discounted_returns(&rewards, self.config.discount)
            .first()
            .copied()
            .unwrap_or_else(T::zero);
        let decay = self.config.baseline_decay;
        self.baseline = decay * self.baseline + (T::one() - decay) * g0;
        Ok(())
    }
}

/// Converts an `f64` seat trajectory into the learner's scalar type.
pub fn trajectory_in<T: Scalar>(traj: &[(usize, Action, f64)]) -> Vec<(usize, Action, T)> {
    traj.iter().map(|&(s, a, r)| (s, a, T::lit(r))).collect()
}
