use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;
const MAX_STALLS: usize = 8;
const ACTIVE_EPS: f64 = 1e-3;

/// Maximizes entropy over `{x in Δ : supp(x) ⊆ support, (A x)_j <= 0 ∀j}`.
///
/// Dual objective `g(λ) = log Σ_{i∈S} exp((Aλ)_i)`, gradient `-(A x)`,
/// Hessian `A_Sᵀ (diag x - x xᵀ) A_S` with `x = softmax((Aλ)_S)`. Multipliers of
/// rows in `S` are free; the others are kept nonnegative. Returns the primal
/// point (zero off `S`) and the number of Newton iterations.
pub(super) fn maximize_entropy<T: Scalar>(
    a: &Matrix<T>,
    support: &[usize],
    max_iterations: usize,
) -> Result<(Vec<T>, usize)> {
    let n = a.rows();
    if support.len() == 1 {
        let mut x = vec![T::zero(); n];
        x[support[0]] = T::one();
        return Ok((x, 0));
    }
    let mut in_support = vec![false; n];
    for &i in support {
        in_support[i] = true;
    }
    let kkt_tol = T::epsilon() * T::lit(256.0);

    let mut lambda = vec![T::zero(); n];
    let mut state = Evaluation::new(a, support, &lambda);
    let mut iterations = 0;
    let mut stalled = 0;
    loop {
        let grad = &state.grad;
        // norm of the projected-gradient step
        let kkt = (0..n)
            .map(|j| {
                if in_support[j] {
                    grad[j].abs()
                } else {
                    (lambda[j] - (lambda[j] - grad[j]).max(T::zero())).abs()
                }
            })
            .fold(T::zero(), T::max);
        if kkt <= kkt_tol {
            break;
        }
        if iterations >= max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual: kkt.to_f64_lossy(),
            });
        }
        iterations += 1;

        // ε-active set: bounded multipliers near zero that the gradient pushes
        // into the bound take a gradient step; the rest take a Newton step.
        let eps_k = kkt.min(T::lit(ACTIVE_EPS));
        let pinned: Vec<bool> = (0..n)
            .map(|j| !in_support[j] && lambda[j] <= eps_k && grad[j] > T::zero())
            .collect();
        let free: Vec<usize> = (0..n).filter(|&j| !pinned[j]).collect();
        let direction = newton_direction(a, support, &state, &free)?;

        let mut step = T::one();
        let mut accepted = false;
        while step > T::lit(MIN_STEP) {
            let mut trial = lambda.clone();
            for (k, &j) in free.iter().enumerate() {
                trial[j] += step * direction[k];
            }
            for j in 0..n {
                if pinned[j] {
                    trial[j] = lambda[j] - step * grad[j];
                }
                if !in_support[j] && trial[j] < T::zero() {
                    trial[j] = T::zero();
                }
            }
            let predicted: T = (0..n).map(|j| grad[j] * (trial[j] - lambda[j])).sum();
            let next = Evaluation::new(a, support, &trial);
            if next.value <= state.value + T::lit(ARMIJO) * predicted {
                // rounding-level steps count as stalls
                if next.value < state.value {
                    stalled = 0;
                } else {
                    stalled += 1;
                }
                lambda = trial;
                state = next;
                accepted = true;
                break;
            }
            step *= T::lit(0.5);
        }
        if !accepted || stalled >= MAX_STALLS {
            // No further decrease representable; the caller checks the residual.
            break;
        }
    }
    Ok((state.x, iterations))
}

struct Evaluation<T> {
    value: T,
    /// primal point, zero off the support
    x: Vec<T>,
    grad: Vec<T>,
}

impl<T: Scalar> Evaluation<T> {
    fn new(a: &Matrix<T>, support: &[usize], lambda: &[T]) -> Self {
        let n = a.rows();
        let u: Vec<T> = support
            .iter()
            .map(|&i| a.row(i).iter().zip(lambda).map(|(&p, &l)| p * l).sum())
            .collect();
        let top = u.iter().copied().fold(T::neg_infinity(), T::max);
        let weights: Vec<T> = u.iter().map(|&v| (v - top).exp()).collect();
        let total: T = weights.iter().copied().sum();
        let mut x = vec![T::zero(); n];
        for (k, &i) in support.iter().enumerate() {
            x[i] = weights[k] / total;
        }
        let grad = a.mul_vec(&x).into_iter().map(|v| -v).collect();
        Self {
            value: top + total.ln(),
            x,
            grad,
        }
    }
}

fn newton_direction<T: Scalar>(
    a: &Matrix<T>,
    support: &[usize],
    state: &Evaluation<T>,
    free: &[usize],
) -> Result<Vec<T>> {
    let f = free.len();
    // B = A[S, free]; H = Bᵀ diag(x) B - (Bᵀx)(Bᵀx)ᵀ
    let xs: Vec<T> = support.iter().map(|&i| state.x[i]).collect();
    let bx: Vec<T> = free
        .iter()
        .map(|&j| support.iter().zip(&xs).map(|(&i, &xi)| a[(i, j)] * xi).sum())
        .collect();
    let mut h = Matrix::zeros(f, f);
    for p in 0..f {
        for q in p..f {
            let mut v = T::zero();
            for (k, &i) in support.iter().enumerate() {
                v += xs[k] * a[(i, free[p])] * a[(i, free[q])];
            }
            v -= bx[p] * bx[q];
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    let trace: T = (0..f).map(|p| h[(p, p)]).sum();
    let mut ridge = T::epsilon().sqrt() * T::lit(1e-4) * (T::one() + trace);
    let rhs: Vec<T> = free.iter().map(|&j| -state.grad[j]).collect();
    for _ in 0..30 {
        if let Some(d) = cholesky_solve(&h, ridge, &rhs) {
            return Ok(d);
        }
        ridge *= T::lit(10.0);
    }
    Err(Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
    })
}

/// Solves `(H + ridge I) d = rhs`; `None` if the factorization breaks down.
fn cholesky_solve<T: Scalar>(h: &Matrix<T>, ridge: T, rhs: &[T]) -> Option<Vec<T>> {
    let n = h.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[(i, j)];
            if i == j {
                s += ridge;
            }
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Some(x)
}
