//! Maximum-entropy Nash equilibria of symmetric zero-sum games given by an
//! antisymmetric evaluation matrix `A`.
//!
//! A strategy `x` is a symmetric equilibrium iff no pure deviation gains
//! against it: `(A x)_j <= 0` for every `j` (the game value is zero). The set
//! of equilibria is a polytope and entropy is strictly concave on it, so the
//! maxent equilibrium is unique.
//!
//! The solver works in two steps:
//!
//! 1. A simplex LP finds the maximal support `S` shared by the relative
//!    interior of the equilibrium polytope.
//! 2. Entropy is maximized over strategies supported on `S` by projected
//!    Newton on the convex dual `min logsumexp_{i in S} (A λ)_i`, with free
//!    multipliers on `S` (those constraints are tight for every equilibrium)
//!    and nonnegative multipliers elsewhere.

mod dual;
pub mod oracle;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp;
use crate::matrix::Matrix;
use crate::metagame::{submatrix, EvaluationMatrix, MixedStrategy};
use crate::scalar::Scalar;

pub use oracle::brute_force_maxent_nash;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct NashSolution<T> {
    pub strategy: MixedStrategy<T>,
    /// Shannon entropy of `strategy`, in nats.
    pub entropy: T,
    /// `max_j (A x)_j`, clipped below at zero.
    pub residual: T,
    /// LP pivots plus Newton iterations.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NashConfig<T> {
    pub tol: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for NashConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(DEFAULT_TOL),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl<T: Scalar> NashConfig<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

pub fn maxent_nash<T: Scalar>(a: &EvaluationMatrix<T>, tol: T) -> Result<NashSolution<T>> {
    maxent_nash_with(a, &NashConfig::with_tol(tol))
}

pub fn maxent_nash_with<T: Scalar>(
    a: &EvaluationMatrix<T>,
    config: &NashConfig<T>,
) -> Result<NashSolution<T>> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidMatrix("empty game".into()));
    }
    if !(config.tol > T::zero()) {
        return Err(Error::InvalidMatrix("tolerance must be positive".into()));
    }
    if n == 1 {
        return Ok(NashSolution {
            strategy: MixedStrategy::pure(1, 0),
            entropy: T::zero(),
            residual: T::zero(),
            iterations: 0,
        });
    }

    // Work on A / max|a|; the equilibrium set is scale invariant.
    let scale = a.entries().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return finish(a, MixedStrategy::uniform(n), 0, config.tol);
    }
    let scaled = a.entries().map(|v| v / scale);

    let (support, pivots) = equilibrium_support(&scaled, config.max_iterations)?;
    let budget = config.max_iterations.saturating_sub(pivots);
    let (x, newton) = dual::maximize_entropy(&scaled, &support, budget)?;
    finish(a, MixedStrategy::normalized(x)?, pivots + newton, config.tol)
}

fn finish<T: Scalar>(
    a: &EvaluationMatrix<T>,
    strategy: MixedStrategy<T>,
    iterations: usize,
    tol: T,
) -> Result<NashSolution<T>> {
    let residual = a.exploitability(strategy.probs());
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(NashSolution {
        entropy: strategy.entropy(),
        strategy,
        residual,
        iterations,
    })
}

/// Maximal support of the equilibrium polytope.
///
/// Solves `max Σ t  s.t.  A z <= 0,  t <= z,  t <= 1,  z, t >= 0` over the
/// equilibrium cone. Every `i` in the maximal support can reach `z_i >= 1`
/// simultaneously, and `z_i = 0` is forced elsewhere, so the optimum has
/// `t_i = 1` exactly on the support.
fn equilibrium_support<T: Scalar>(a: &Matrix<T>, max_pivots: usize) -> Result<(Vec<usize>, usize)> {
    let n = a.rows();
    let mut m = Matrix::zeros(3 * n, 2 * n);
    let mut b = vec![T::zero(); 3 * n];
    for j in 0..n {
        for i in 0..n {
            m[(j, i)] = a[(j, i)];
        }
        m[(n + j, j)] = -T::one();
        m[(n + j, n + j)] = T::one();
        m[(2 * n + j, n + j)] = T::one();
        b[2 * n + j] = T::one();
    }
    let mut c = vec![T::zero(); 2 * n];
    for v in c.iter_mut().skip(n) {
        *v = T::one();
    }
    let sol = lp::maximize(&c, &m, &b, max_pivots)?;
    let support: Vec<usize> = (0..n).filter(|&i| sol.primal[n + i] > T::lit(0.5)).collect();
    if support.is_empty() {
        return Err(Error::InvalidMatrix("support LP returned an empty support".into()));
    }
    Ok((support, sol.pivots))
}

/// Maxent Nash of every leading `k x k` subgame, zero-padded to length `n`.
/// Element `k - 1` is the support analysis after `k` checkpoints.
pub fn nash_support_series<T: Scalar>(
    a: &EvaluationMatrix<T>,
    tol: T,
) -> Result<Vec<MixedStrategy<T>>> {
    let n = a.len();
    (1..=n)
        .into_par_iter()
        .map(|k| {
            let sub = submatrix(a, k)?;
            maxent_nash(&sub, tol)
                .map(|s| s.strategy.padded(n))
                .map_err(|e| Error::Subgame {
                    k,
                    source: Box::new(e),
                })
        })
        .collect()
}
