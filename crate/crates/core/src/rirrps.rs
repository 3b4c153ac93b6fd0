//! Repeated imperfect-recall Rock-Paper-Scissors.
//!
//! Two players play `repetitions` simultaneous RPS rounds. Each round pays
//! +1 / -1 / 0. Both observe only the last `recall` joint actions. The player
//! with the higher cumulative reward wins; ties go to a fair coin.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Rock = 0,
    Paper = 1,
    Scissors = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Rock, Action::Paper, Action::Scissors];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn beats(self, other: Action) -> bool {
        matches!(
            (self, other),
            (Action::Rock, Action::Scissors)
                | (Action::Scissors, Action::Paper)
                | (Action::Paper, Action::Rock)
        )
    }
}

/// Round rewards `(player 1, player 2)`.
pub fn round_payoff(a1: Action, a2: Action) -> (i32, i32) {
    if a1.beats(a2) {
        (1, -1)
    } else if a2.beats(a1) {
        (-1, 1)
    } else {
        (0, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JointAction {
    pub p1: Action,
    pub p2: Action,
}

impl JointAction {
    pub const COUNT: usize = 9;

    /// `3 * a1 + a2`, in `0..9`.
    pub fn index(self) -> usize {
        3 * self.p1.index() + self.p2.index()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Some(Self {
            p1: Action::from_index(i / 3)?,
            p2: Action::from_index(i % 3)?,
        })
    }

    /// Index with `player`'s own action first.
    pub fn index_for(self, player: Player) -> usize {
        match player {
            Player::One => self.index(),
            Player::Two => 3 * self.p2.index() + self.p1.index(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RirRpsConfig {
    pub repetitions: u32,
    pub recall: u32,
}

impl Default for RirRpsConfig {
    fn default() -> Self {
        Self {
            repetitions: 10,
            recall: 3,
        }
    }
}

impl RirRpsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.recall > 6 {
            return Err(Error::Config("recall above 6 is not supported by the tabular state index".into()));
        }
        Ok(())
    }

    /// `Σ_{l=0}^{recall} 9^l`: 820 for recall 3.
    pub fn num_states(&self) -> usize {
        (0..=self.recall).map(|l| JointAction::COUNT.pow(l)).sum()
    }
}

/// The last `recall` joint actions, most recent last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallState {
    recall: usize,
    window: VecDeque<JointAction>,
}

impl RecallState {
    pub fn new(recall: u32) -> Self {
        Self {
            recall: recall as usize,
            window: VecDeque::with_capacity(recall as usize),
        }
    }

    pub fn push(&mut self, joint: JointAction) {
        if self.recall == 0 {
            return;
        }
        if self.window.len() == self.recall {
            self.window.pop_front();
        }
        self.window.push_back(joint);
    }

    pub fn window(&self) -> impl Iterator<Item = JointAction> + '_ {
        self.window.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Dense state index as seen by `player` (own action first in each pair).
    /// Windows of length `l` occupy `[offset(l), offset(l) + 9^l)`.
    pub fn index_for(&self, player: Player) -> usize {
        let l = self.window.len();
        let offset: usize = (0..l).map(|k| JointAction::COUNT.pow(k as u32)).sum();
        let digits = self
            .window
            .iter()
            .fold(0usize, |acc, j| acc * JointAction::COUNT + j.index_for(player));
        offset + digits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub rewards: (i32, i32),
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct RirRps {
    config: RirRpsConfig,
    state: RecallState,
    round: u32,
    cumulative: [i32; 2],
}

impl RirRps {
    pub fn new(config: RirRpsConfig) -> Self {
        Self {
            config,
            state: RecallState::new(config.recall),
            round: 0,
            cumulative: [0, 0],
        }
    }

    pub fn config(&self) -> &RirRpsConfig {
        &self.config
    }

    pub fn state(&self) -> &RecallState {
        &self.state
    }

    pub fn observation(&self, player: Player) -> usize {
        self.state.index_for(player)
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn cumulative(&self) -> [i32; 2] {
        self.cumulative
    }

    pub fn is_done(&self) -> bool {
        self.round >= self.config.repetitions
    }

    pub fn step(&mut self, a1: Action, a2: Action) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let rewards = round_payoff(a1, a2);
        self.cumulative[0] += rewards.0;
        self.cumulative[1] += rewards.1;
        self.state.push(JointAction { p1: a1, p2: a2 });
        self.round += 1;
        Ok(StepOutcome {
            rewards,
            done: self.is_done(),
        })
    }
}

/// Strictly higher cumulative reward wins; a tie is a fair coin.
pub fn decide_winner<R: Rng + ?Sized>(cumulative: [i32; 2], rng: &mut R) -> Player {
    use std::cmp::Ordering::*;
    match cumulative[0].cmp(&cumulative[1]) {
        Greater => Player::One,
        Less => Player::Two,
        Equal => {
            if rng.gen_bool(0.5) {
                Player::One
            } else {
                Player::Two
            }
        }
    }
}

/// Anything that can choose an action from a dense observation index.
pub trait Policy {
    fn act(&self, observation: usize, rng: &mut dyn RngCore) -> Action;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn act(&self, observation: usize, rng: &mut dyn RngCore) -> Action {
        (**self).act(observation, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixedAgent {
    Rock,
    Paper,
    Scissors,
    Random,
}

impl FixedAgent {
    pub const ALL: [FixedAgent; 4] = [
        FixedAgent::Rock,
        FixedAgent::Paper,
        FixedAgent::Scissors,
        FixedAgent::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixedAgent::Rock => "rock",
            FixedAgent::Paper => "paper",
            FixedAgent::Scissors => "scissors",
            FixedAgent::Random => "random",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl Policy for FixedAgent {
    fn act(&self, _observation: usize, rng: &mut dyn RngCore) -> Action {
        match self {
            FixedAgent::Rock => Action::Rock,
            FixedAgent::Paper => Action::Paper,
            FixedAgent::Scissors => Action::Scissors,
            FixedAgent::Random => Action::ALL[rng.gen_range(0..3)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    /// Observation index before the round, per player.
    pub observations: [usize; 2],
    pub joint: JointAction,
    pub rewards: [i32; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeResult {
    pub rounds: Vec<RoundRecord>,
    pub cumulative: [i32; 2],
    pub winner: Player,
}

impl EpisodeResult {
    pub fn joint_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.rounds.iter().map(|r| r.joint.index())
    }

    /// `(observation, own action, own reward)` per round for one seat.
    pub fn seat_trajectory(&self, player: Player) -> Vec<(usize, Action, f64)> {
        let k = match player {
            Player::One => 0,
            Player::Two => 1,
        };
        self.rounds
            .iter()
            .map(|r| {
                let a = if k == 0 { r.joint.p1 } else { r.joint.p2 };
                (r.observations[k], a, f64::from(r.rewards[k]))
            })
            .collect()
    }

    /// One trajectory-log line: `episode j1 j2 ...` with joint indices 0..9.
    pub fn log_line(&self, episode: u64) -> String {
        let mut s = episode.to_string();
        for j in self.joint_indices() {
            let _ = write!(s, " {j}");
        }
        s
    }
}

/// Plays one full episode. Per round, player 1 acts before player 2 on the
/// shared rng; the tie-break coin (if any) is drawn last.
pub fn play_episode(
    config: RirRpsConfig,
    p1: &dyn Policy,
    p2: &dyn Policy,
    rng: &mut dyn RngCore,
) -> EpisodeResult {
    let mut env = RirRps::new(config);
    let mut rounds = Vec::with_capacity(config.repetitions as usize);
    while !env.is_done() {
        let observations = [env.observation(Player::One), env.observation(Player::Two)];
        let a1 = p1.act(observations[0], rng);
        let a2 = p2.act(observations[1], rng);
        let out = env.step(a1, a2).expect("loop guards on done");
        rounds.push(RoundRecord {
            observations,
            joint: JointAction { p1: a1, p2: a2 },
            rewards: [out.rewards.0, out.rewards.1],
        });
    }
    let cumulative = env.cumulative();
    let winner = decide_winner(cumulative, rng);
    EpisodeResult {
        rounds,
        cumulative,
        winner,
    }
}

/// Every observation index reachable within one episode (player 1's view).
pub fn reachable_states(config: RirRpsConfig) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut frontier = vec![RecallState::new(config.recall)];
    seen.insert(frontier[0].index_for(Player::One));
    for _ in 0..config.repetitions {
        let mut next = Vec::new();
        let mut next_seen = BTreeSet::new();
        for s in &frontier {
            for j in 0..JointAction::COUNT {
                let mut t = s.clone();
                t.push(JointAction::from_index(j).expect("j < 9"));
                let idx = t.index_for(Player::One);
                seen.insert(idx);
                if next_seen.insert(idx) {
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    seen
}
