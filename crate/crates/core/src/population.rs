//! Relative population performance: the value, for population 1, of the
//! zero-sum game given by the cross-population evaluation matrix.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp;
use crate::metagame::{CrossEvaluation, MixedStrategy};
use crate::scalar::Scalar;

const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RppResult<T> {
    /// Positive when population 1 wins on average.
    pub value: T,
    pub nash_row: MixedStrategy<T>,
    pub nash_col: MixedStrategy<T>,
}

/// Solves the zero-sum game `A` (rows maximize) and returns `n1ᵀ A n2`.
///
/// `A + c` with `c = 1 - min A` is strictly positive, so the column player's
/// LP `max Σy s.t. (A + c) y <= 1` has a feasible origin. Its solution gives
/// the column strategy and its dual the row strategy.
pub fn relative_population_performance<T: Scalar>(a: &CrossEvaluation<T>) -> Result<RppResult<T>> {
    let m = a.entries();
    let shift = T::one() - m.min_entry();
    let shifted = m.map(|v| v + shift);
    let c = vec![T::one(); m.cols()];
    let b = vec![T::one(); m.rows()];
    let sol = lp::maximize(&c, &shifted, &b, MAX_PIVOTS)?;
    if !(sol.objective > T::zero()) {
        return Err(Error::InvalidMatrix("degenerate zero-sum LP".into()));
    }
    let nash_col = MixedStrategy::normalized(sol.primal)?;
    let nash_row = MixedStrategy::normalized(sol.dual)?;
    let value = m.bilinear(nash_row.probs(), nash_col.probs());
    Ok(RppResult {
        value,
        nash_row,
        nash_col,
    })
}

/// Element `i - 1` is the relative population performance over the first `i`
/// checkpoints of each population (leading `i x i` block of one matrix).
pub fn rpp_evolution<T: Scalar>(a: &CrossEvaluation<T>) -> Result<Vec<T>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    (1..=a.rows())
        .into_par_iter()
        .map(|k| {
            a.leading(k)
                .and_then(|sub| relative_population_performance(&sub))
                .map(|r| r.value)
                .map_err(|e| Error::Subgame {
                    k,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// `index,value` CSV with 1-based indices.
pub fn evolution_csv<T: Scalar>(values: &[T]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, crate::metagame::fmt6(*v)));
    }
    out
}
