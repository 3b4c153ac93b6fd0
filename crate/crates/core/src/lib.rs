//! Generalized self-play on repeated imperfect-recall Rock-Paper-Scissors.
//!
//! The crate is split along the pieces of a self-play study:
//!
//! - [`metagame`]: winrate / evaluation matrices and mixed strategies.
//! - [`nash`]: maximum-entropy Nash for antisymmetric (symmetric zero-sum) games.
//! - [`population`]: relative population performance and its evolution.
//! - [`rirrps`]: the repeated RPS environment and the fixed reference agents.
//! - [`learner`]: a tabular softmax policy trained with REINFORCE.
//! - [`selfplay`]: menagerie, opponent sampling and curation for the four schemes.
//! - [`harness`]: training runs, matrix estimation, analysis, PSRO sweeps.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which is what the harness uses.

// `!(x > 0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod learner;
pub mod lp;
pub mod matrix;
pub mod metagame;
pub mod nash;
pub mod population;
pub mod rirrps;
pub mod scalar;
pub mod selfplay;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = matrix::Matrix<f64>;
pub type WinrateMatrix = metagame::WinrateMatrix<f64>;
pub type EvaluationMatrix = metagame::EvaluationMatrix<f64>;
pub type CrossEvaluation = metagame::CrossEvaluation<f64>;
pub type MixedStrategy = metagame::MixedStrategy<f64>;
pub type NashSolution = nash::NashSolution<f64>;
pub type RppResult = population::RppResult<f64>;
pub type TabularSoftmaxPolicy = learner::TabularSoftmaxPolicy<f64>;
pub type LearnerConfig = learner::LearnerConfig<f64>;
