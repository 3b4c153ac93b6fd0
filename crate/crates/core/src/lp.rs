//! Dense tableau simplex for `max cᵀv  s.t.  M v <= b, v >= 0` with `b >= 0`.
//!
//! With a nonnegative right-hand side the slack basis is feasible, so no
//! phase one is needed. Both LPs this crate solves have that shape.
//! Pivoting is Dantzig's rule, falling back to Bland's rule after a run of
//! degenerate pivots so cycling cannot occur.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub primal: Vec<T>,
    /// Nonnegative multipliers of the `M v <= b` rows.
    pub dual: Vec<T>,
    pub objective: T,
    pub pivots: usize,
}

pub(crate) fn pivot_tol<T: Scalar>() -> T {
    T::epsilon().sqrt() * T::lit(0.01)
}

/// Solves the LP or reports an unbounded objective / exhausted pivot budget.
pub fn maximize<T: Scalar>(
    c: &[T],
    m: &Matrix<T>,
    b: &[T],
    max_pivots: usize,
) -> Result<LpSolution<T>> {
    let rows = m.rows();
    let vars = m.cols();
    if c.len() != vars {
        return Err(Error::DimensionMismatch {
            expected: vars,
            got: c.len(),
        });
    }
    if b.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: b.len(),
        });
    }
    if b.iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidMatrix("LP right-hand side must be nonnegative".into()));
    }

    let width = vars + rows + 1;
    let rhs = width - 1;
    // constraint rows followed by the objective row
    let mut t = Matrix::zeros(rows + 1, width);
    for i in 0..rows {
        for j in 0..vars {
            t[(i, j)] = m[(i, j)];
        }
        t[(i, vars + i)] = T::one();
        t[(i, rhs)] = b[i];
    }
    for j in 0..vars {
        t[(rows, j)] = -c[j];
    }
    let mut basis: Vec<usize> = (vars..vars + rows).collect();

    let eps = pivot_tol::<T>();
    let mut pivots = 0;
    let mut degenerate = 0;
    loop {
        let bland = degenerate >= DEGENERATE_RUN;
        let entering = if bland {
            (0..width - 1).find(|&j| t[(rows, j)] < -eps)
        } else {
            let mut best = None;
            let mut best_val = -eps;
            for j in 0..width - 1 {
                if t[(rows, j)] < best_val {
                    best_val = t[(rows, j)];
                    best = Some(j);
                }
            }
            best
        };
        let Some(col) = entering else { break };

        let mut leave: Option<usize> = None;
        let mut best_ratio = T::infinity();
        for i in 0..rows {
            let a = t[(i, col)];
            if a > eps {
                let ratio = t[(i, rhs)] / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - eps
                            || (ratio <= best_ratio + eps && basis[i] < basis[l])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::InvalidMatrix("LP objective is unbounded".into()));
        };

        if pivots >= max_pivots {
            return Err(Error::NoConvergence {
                iterations: pivots,
                residual: t[(rows, col)].abs().to_f64_lossy(),
            });
        }
        if best_ratio <= eps {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        pivot(&mut t, row, col);
        basis[row] = col;
        pivots += 1;
    }

    let mut primal = vec![T::zero(); vars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < vars {
            primal[bv] = t[(i, rhs)].max(T::zero());
        }
    }
    let dual = (0..rows).map(|i| t[(rows, vars + i)].max(T::zero())).collect();
    Ok(LpSolution {
        objective: t[(rows, rhs)],
        primal,
        dual,
        pivots,
    })
}

fn pivot<T: Scalar>(t: &mut Matrix<T>, row: usize, col: usize) {
    let width = t.cols();
    let p = t[(row, col)];
    for j in 0..width {
        t[(row, j)] /= p;
    }
    t[(row, col)] = T::one();
    let pivot_row: Vec<T> = t.row(row).to_vec();
    for i in 0..t.rows() {
        if i == row {
            continue;
        }
        let f = t[(i, col)];
        if f == T::zero() {
            continue;
        }
        for j in 0..width {
            let v = pivot_row[j];
            if v != T::zero() {
                t[(i, j)] -= f * v;
            }
        }
        t[(i, col)] = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let m = Matrix::<f64>::from_f64_rows(&[[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]]);
        let s = maximize(&[3.0, 5.0], &m, &[4.0, 12.0, 18.0], 100).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.primal[0] - 2.0).abs() < 1e-12);
        assert!((s.primal[1] - 6.0).abs() < 1e-12);
        // dual: (0, 1.5, 1); bᵀy = objective
        let by: f64 = s.dual.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((by - 36.0).abs() < 1e-12);
        assert!((s.dual[1] - 1.5).abs() < 1e-12 && (s.dual[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let m = Matrix::<f64>::from_f64_rows(&[[-1.0, 1.0]]);
        assert!(maximize(&[1.0, 0.0], &m, &[1.0], 100).is_err());
    }

    #[test]
    fn degenerate_zero_rhs() {
        // cone problem: all b = 0 except bounds
        let m = Matrix::<f64>::from_f64_rows(&[[1.0, -1.0], [-1.0, 1.0], [1.0, 0.0]]);
        let s = maximize(&[1.0, 1.0], &m, &[0.0, 0.0, 1.0], 100).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let m = Matrix::<f32>::from_f64_rows(&[[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]]);
        let s = maximize(&[3.0f32, 5.0], &m, &[4.0, 12.0, 18.0], 100).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-4);
    }
}
