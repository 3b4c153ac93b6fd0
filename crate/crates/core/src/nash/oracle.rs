//! Brute-force maxent Nash for small games, used as a test oracle.
//!
//! Enumerates every vertex of the symmetric-equilibrium polytope by solving the
//! equal-payoff system for each (support, extra active rows) pair, then
//! maximizes entropy over the convex hull of the vertices with exponentiated
//! gradient ascent from several starts. Shares no numerical code with the
//! main solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NashSolution;
use crate::error::{Error, Result};
use crate::metagame::{EvaluationMatrix, MixedStrategy};
use crate::scalar::Scalar;

pub const MAX_ORACLE_SIZE: usize = 6;

const FEAS_TOL: f64 = 1e-10;
const RESTARTS: usize = 12;
const ASCENT_STEPS: usize = 4000;

pub fn brute_force_maxent_nash<T: Scalar>(a: &EvaluationMatrix<T>) -> Result<NashSolution<T>> {
    let n = a.len();
    let a64 = to_f64(a);
    let vertices = vertices_f64(&a64, n)?;
    let x = if vertices.len() == 1 {
        vertices[0].clone()
    } else {
        hull_maxent(&vertices)
    };
    let strategy = MixedStrategy::normalized(x.iter().map(|&v| T::lit(v)).collect())?;
    let residual = a.exploitability(strategy.probs());
    Ok(NashSolution {
        entropy: strategy.entropy(),
        strategy,
        residual,
        iterations: vertices.len(),
    })
}

/// All vertices of `{x ∈ Δ : A x <= 0}` (deduplicated).
pub fn enumerate_equilibrium_vertices<T: Scalar>(a: &EvaluationMatrix<T>) -> Result<Vec<Vec<f64>>> {
    vertices_f64(&to_f64(a), a.len())
}

fn to_f64<T: Scalar>(a: &EvaluationMatrix<T>) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j).to_f64_lossy()).collect())
        .collect()
}

fn vertices_f64(a: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    if n > MAX_ORACLE_SIZE {
        return Err(Error::TooLarge {
            n,
            max: MAX_ORACLE_SIZE,
        });
    }
    if n == 0 {
        return Err(Error::InvalidMatrix("empty game".into()));
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for s_mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| s_mask & (1 << i) != 0).collect();
        let rest: Vec<usize> = (0..n).filter(|&i| s_mask & (1 << i) == 0).collect();
        for r_mask in 0u32..(1 << rest.len()) {
            let mut rows: Vec<usize> = support.clone();
            rows.extend(
                rest.iter()
                    .enumerate()
                    .filter(|(k, _)| r_mask & (1 << k) != 0)
                    .map(|(_, &j)| j),
            );
            let Some(xs) = solve_active_system(a, &support, &rows) else {
                continue;
            };
            let mut x = vec![0.0; n];
            for (k, &i) in support.iter().enumerate() {
                x[i] = xs[k];
            }
            if !is_equilibrium(a, &x) {
                continue;
            }
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= total);
            if !found
                .iter()
                .any(|y| y.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9))
            {
                found.push(x);
            }
        }
    }
    if found.is_empty() {
        return Err(Error::InvalidMatrix("no symmetric equilibrium found".into()));
    }
    Ok(found)
}

fn is_equilibrium(a: &[Vec<f64>], x: &[f64]) -> bool {
    if x.iter().any(|&v| v < -FEAS_TOL) {
        return false;
    }
    a.iter()
        .all(|row| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= FEAS_TOL)
}

/// Unique solution of `A[rows, support] x = 0, Σx = 1`, if the system has one.
fn solve_active_system(a: &[Vec<f64>], support: &[usize], rows: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let mut aug: Vec<Vec<f64>> = rows
        .iter()
        .map(|&j| {
            let mut r: Vec<f64> = support.iter().map(|&i| a[j][i]).collect();
            r.push(0.0);
            r
        })
        .collect();
    let mut ones = vec![1.0; k];
    ones.push(1.0);
    aug.push(ones);

    // Gaussian elimination with partial pivoting; rank must equal k.
    let m = aug.len();
    let mut pivot_row = 0;
    let mut pivot_cols = Vec::with_capacity(k);
    for col in 0..k {
        let best = (pivot_row..m).max_by(|&p, &q| aug[p][col].abs().total_cmp(&aug[q][col].abs()));
        let Some(best) = best else { break };
        if aug[best][col].abs() < 1e-12 {
            continue;
        }
        aug.swap(pivot_row, best);
        let p = aug[pivot_row][col];
        for c in col..=k {
            aug[pivot_row][c] /= p;
        }
        for r in 0..m {
            if r != pivot_row {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in col..=k {
                        aug[r][c] -= f * aug[pivot_row][c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        pivot_row += 1;
    }
    if pivot_cols.len() < k {
        return None;
    }
    // inconsistent rows
    if aug[pivot_row..].iter().any(|r| r[k].abs() > 1e-9) {
        return None;
    }
    let mut x = vec![0.0; k];
    for (r, &c) in pivot_cols.iter().enumerate() {
        x[c] = aug[r][k];
    }
    Some(x)
}

fn entropy_of(x: &[f64]) -> f64 {
    x.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

fn combine(vertices: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let n = vertices[0].len();
    let mut x = vec![0.0; n];
    for (v, &wk) in vertices.iter().zip(w) {
        for i in 0..n {
            x[i] += wk * v[i];
        }
    }
    x
}

/// Max entropy of `Σ w_k v_k` over hull weights `w ∈ Δ`.
fn hull_maxent(vertices: &[Vec<f64>]) -> Vec<f64> {
    let k = vertices.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0DAC1E);
    let mut best_x = combine(vertices, &vec![1.0 / k as f64; k]);
    let mut best_h = entropy_of(&best_x);
    for restart in 0..RESTARTS {
        let mut w: Vec<f64> = if restart == 0 {
            vec![1.0 / k as f64; k]
        } else {
            let raw: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-9..1.0f64).ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        };
        let mut x = combine(vertices, &w);
        let mut h = entropy_of(&x);
        let mut eta = 1.0;
        for _ in 0..ASCENT_STEPS {
            let grad: Vec<f64> = vertices
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&x)
                        .filter(|(_, &xi)| xi > 0.0)
                        .map(|(&vi, &xi)| vi * (-xi.ln() - 1.0))
                        .sum()
                })
                .collect();
            let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut improved = false;
            while eta > 1e-12 {
                let mut cand: Vec<f64> = w
                    .iter()
                    .zip(&grad)
                    .map(|(&wk, &g)| wk * (eta * (g - gmax)).exp())
                    .collect();
                let s: f64 = cand.iter().sum();
                cand.iter_mut().for_each(|c| *c /= s);
                let cx = combine(vertices, &cand);
                let ch = entropy_of(&cx);
                if ch > h {
                    w = cand;
                    x = cx;
                    h = ch;
                    improved = true;
                    eta *= 1.5;
                    break;
                }
                eta *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if h > best_h {
            best_h = h;
            best_x = x;
        }
    }
    best_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn game(rows: &[[f64; 3]]) -> EvaluationMatrix<f64> {
        EvaluationMatrix::new(Matrix::<f64>::from_f64_rows(rows)).unwrap()
    }

    #[test]
    fn rps_uniform() {
        let a = game(&[[0.0, -0.5, 0.5], [0.5, 0.0, -0.5], [-0.5, 0.5, 0.0]]);
        let s = brute_force_maxent_nash(&a).unwrap();
        for &p in s.strategy.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_row() {
        let a = game(&[[0.0, 0.2, 0.1], [-0.2, 0.0, 0.4], [-0.1, -0.4, 0.0]]);
        let s = brute_force_maxent_nash(&a).unwrap();
        assert_eq!(s.strategy.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn two_by_two_enumeration() {
        let c = 0.37;
        let a = EvaluationMatrix::new(Matrix::<f64>::from_f64_rows(&[[0.0, c], [-c, 0.0]])).unwrap();
        let v = enumerate_equilibrium_vertices(&a).unwrap();
        assert_eq!(v, vec![vec![1.0, 0.0]]);
        assert_eq!(brute_force_maxent_nash(&a).unwrap().strategy.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn zero_game_hull_is_uniform() {
        let a = EvaluationMatrix::new(Matrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(enumerate_equilibrium_vertices(&a).unwrap().len(), 4);
        let s = brute_force_maxent_nash(&a).unwrap();
        for &p in s.strategy.probs() {
            assert!((p - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_large_games() {
        let a = EvaluationMatrix::new(Matrix::<f64>::zeros(7, 7)).unwrap();
        assert!(matches!(brute_force_maxent_nash(&a), Err(Error::TooLarge { .. })));
    }
}
