//! Meta-game matrices: empirical winrates, the antisymmetric evaluation
//! matrix derived from them, and mixed strategies over policies.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{entropy, Scalar};

/// Tolerance on `w_ij + w_ji = 1` and on antisymmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Probabilities below this are treated as outside the support when serialized.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

fn simplex_tol<T: Scalar>(n: usize) -> T {
    T::lit(SYMMETRY_TOL).max(T::epsilon() * T::from_count(16 * n.max(1)))
}

/// Empirical head-to-head winrates within one population.
///
/// Square, diagonal exactly one half, `w_ij + w_ji = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WinrateMatrix<T> {
    labels: Vec<String>,
    entries: Matrix<T>,
    sims_per_entry: u32,
}

impl<T: Scalar> WinrateMatrix<T> {
    pub fn new(labels: Vec<String>, entries: Matrix<T>, sims_per_entry: u32) -> Result<Self> {
        let n = entries.rows();
        if !entries.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "winrate matrix must be square, got {}x{}",
                n,
                entries.cols()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidMatrix("empty winrate matrix".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if sims_per_entry == 0 {
            return Err(Error::InvalidMatrix("sims_per_entry must be positive".into()));
        }
        let tol = T::lit(SYMMETRY_TOL);
        let half = T::lit(0.5);
        let mut entries = entries;
        for i in 0..n {
            for j in 0..n {
                let w = entries[(i, j)];
                if !(w >= T::zero() && w <= T::one()) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) = {w} outside [0,1]"
                    )));
                }
                if (w + entries[(j, i)] - T::one()).abs() > tol {
                    return Err(Error::InvalidMatrix(format!(
                        "w[{i}][{j}] + w[{j}][{i}] = {} != 1",
                        w + entries[(j, i)]
                    )));
                }
            }
            if (entries[(i, i)] - half).abs() > tol {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry {i} = {} != 0.5",
                    entries[(i, i)]
                )));
            }
            entries[(i, i)] = half;
        }
        Ok(Self {
            labels,
            entries,
            sims_per_entry,
        })
    }

    /// Builds the matrix from the strict upper triangle; the mirrored entries are
    /// filled as `1 - w_ij` and the diagonal is fixed at one half.
    pub fn from_upper(
        labels: Vec<String>,
        sims_per_entry: u32,
        mut upper: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        let n = labels.len();
        let mut m = Matrix::filled(n, n, T::lit(0.5));
        for i in 0..n {
            for j in i + 1..n {
                let w = upper(i, j);
                m[(i, j)] = w;
                m[(j, i)] = T::one() - w;
            }
        }
        Self::new(labels, m, sims_per_entry)
    }

    pub fn len(&self) -> usize {
        self.entries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn sims_per_entry(&self) -> u32 {
        self.sims_per_entry
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    /// Appends one policy. `vs_existing[i]` is the winrate of existing policy `i`
    /// against the new one.
    pub fn extend(&mut self, label: String, vs_existing: &[T]) -> Result<()> {
        let n = self.len();
        if vs_existing.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: vs_existing.len(),
            });
        }
        let mut m = Matrix::filled(n + 1, n + 1, T::lit(0.5));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.entries[(i, j)];
            }
            m[(i, n)] = vs_existing[i];
            m[(n, i)] = T::one() - vs_existing[i];
        }
        let mut labels = self.labels.clone();
        labels.push(label);
        *self = Self::new(labels, m, self.sims_per_entry)?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        write_csv(&self.labels, &self.labels, &self.entries)
    }
}

/// Winrates of population 1 (rows) against population 2 (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossWinrateMatrix<T> {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    entries: Matrix<T>,
    sims_per_entry: u32,
}

impl<T: Scalar> CrossWinrateMatrix<T> {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        entries: Matrix<T>,
        sims_per_entry: u32,
    ) -> Result<Self> {
        if row_labels.len() != entries.rows() {
            return Err(Error::DimensionMismatch {
                expected: entries.rows(),
                got: row_labels.len(),
            });
        }
        if col_labels.len() != entries.cols() {
            return Err(Error::DimensionMismatch {
                expected: entries.cols(),
                got: col_labels.len(),
            });
        }
        if entries.iter().any(|&w| !(w >= T::zero() && w <= T::one())) {
            return Err(Error::InvalidMatrix("cross winrate entry outside [0,1]".into()));
        }
        Ok(Self {
            row_labels,
            col_labels,
            entries,
            sims_per_entry,
        })
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn sims_per_entry(&self) -> u32 {
        self.sims_per_entry
    }

    /// `A = W - 1/2` elementwise.
    pub fn to_evaluation(&self) -> CrossEvaluation<T> {
        CrossEvaluation {
            entries: self.entries.map(|w| w - T::lit(0.5)),
        }
    }

    pub fn to_csv(&self) -> String {
        write_csv(&self.row_labels, &self.col_labels, &self.entries)
    }
}

/// Antisymmetric payoff matrix of a symmetric zero-sum meta-game.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationMatrix<T> {
    entries: Matrix<T>,
}

impl<T: Scalar> EvaluationMatrix<T> {
    /// Validates antisymmetry (within [`SYMMETRY_TOL`]) and the `[-1/2, 1/2]` range,
    /// then stores an exactly antisymmetric copy built from the upper triangle.
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        Self::validated(entries, true)
    }

    /// Like [`EvaluationMatrix::new`] without the `[-1/2, 1/2]` range check. Used for
    /// arbitrary antisymmetric games (e.g. rescaled matrices).
    pub fn antisymmetric(entries: Matrix<T>) -> Result<Self> {
        Self::validated(entries, false)
    }

    fn validated(entries: Matrix<T>, check_range: bool) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "evaluation matrix must be square, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        let n = entries.rows();
        let tol = T::lit(SYMMETRY_TOL);
        let half = T::lit(0.5);
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let a = entries[(i, j)];
                if !a.is_finite() {
                    return Err(Error::InvalidMatrix(format!("entry ({i},{j}) not finite")));
                }
                if (a + entries[(j, i)]).abs() > tol {
                    return Err(Error::InvalidMatrix(format!(
                        "not antisymmetric at ({i},{j}): {a} vs {}",
                        entries[(j, i)]
                    )));
                }
                if check_range && a.abs() > half + tol {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) = {a} outside [-1/2, 1/2]"
                    )));
                }
                if i < j {
                    out[(i, j)] = a;
                    out[(j, i)] = -a;
                }
            }
        }
        Ok(Self { entries: out })
    }

    pub fn len(&self) -> usize {
        self.entries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    /// Payoff of each pure deviation against `x`: `(A x)_j`.
    pub fn deviation_payoffs(&self, x: &[T]) -> Vec<T> {
        self.entries.mul_vec(x)
    }

    /// Largest gain any pure strategy obtains against `x`, clipped below at zero.
    /// Zero exactly when `x` is a symmetric equilibrium.
    pub fn exploitability(&self, x: &[T]) -> T {
        self.deviation_payoffs(x)
            .into_iter()
            .fold(T::zero(), T::max)
    }

    pub fn to_csv(&self, labels: &[String]) -> String {
        write_csv(labels, labels, &self.entries)
    }
}

/// Rectangular evaluation matrix between two populations, `A = W - 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEvaluation<T> {
    entries: Matrix<T>,
}

impl<T: Scalar> CrossEvaluation<T> {
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        let half = T::lit(0.5) + T::lit(SYMMETRY_TOL);
        if entries.rows() == 0 || entries.cols() == 0 {
            return Err(Error::InvalidMatrix("empty evaluation matrix".into()));
        }
        if entries.iter().any(|a| !a.is_finite() || a.abs() > half) {
            return Err(Error::InvalidMatrix(
                "evaluation entry outside [-1/2, 1/2]".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.rows() || k > self.cols() {
            return Err(Error::OutOfRange {
                index: k,
                max: self.rows().min(self.cols()),
            });
        }
        Ok(Self {
            entries: self.entries.leading(k, k),
        })
    }

    /// Swaps the populations: `-Aᵀ`.
    pub fn swapped(&self) -> Self {
        Self {
            entries: self.entries.transpose().map(|a| -a),
        }
    }
}

impl<T: Scalar> From<&EvaluationMatrix<T>> for CrossEvaluation<T> {
    fn from(a: &EvaluationMatrix<T>) -> Self {
        Self {
            entries: a.entries.clone(),
        }
    }
}

/// `a_ij = w_ij - 1/2`.
pub fn winrate_to_evaluation<T: Scalar>(w: &WinrateMatrix<T>) -> Result<EvaluationMatrix<T>> {
    let n = w.len();
    let tol = T::lit(SYMMETRY_TOL);
    for i in 0..n {
        for j in i..n {
            if (w.get(i, j) + w.get(j, i) - T::one()).abs() > tol {
                return Err(Error::InvalidMatrix(format!(
                    "w[{i}][{j}] + w[{j}][{i}] != 1"
                )));
            }
        }
    }
    EvaluationMatrix::new(w.entries().map(|x| x - T::lit(0.5)))
}

/// Inverse of [`winrate_to_evaluation`]: `w_ij = a_ij + 1/2`.
pub fn evaluation_to_winrate<T: Scalar>(
    a: &EvaluationMatrix<T>,
    labels: Vec<String>,
    sims_per_entry: u32,
) -> Result<WinrateMatrix<T>> {
    WinrateMatrix::new(labels, a.entries().map(|x| x + T::lit(0.5)), sims_per_entry)
}

/// Leading principal `k x k` block (checkpoints `1..=k`).
pub fn submatrix<T: Scalar>(a: &EvaluationMatrix<T>, k: usize) -> Result<EvaluationMatrix<T>> {
    if k == 0 || k > a.len() {
        return Err(Error::OutOfRange {
            index: k,
            max: a.len(),
        });
    }
    Ok(EvaluationMatrix {
        entries: a.entries.leading(k, k),
    })
}

/// A probability vector over policies or actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy<T> {
    probs: Vec<T>,
}

impl<T: Scalar> MixedStrategy<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty strategy".into()));
        }
        if probs.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
            return Err(Error::InvalidStrategy("negative or non-finite entry".into()));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > simplex_tol::<T>(probs.len()) {
            return Err(Error::InvalidStrategy(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Clips tiny negatives from numerical noise and renormalizes.
    pub(crate) fn normalized(mut probs: Vec<T>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < T::zero() {
                *p = T::zero();
            }
        }
        let total: T = probs.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::InvalidStrategy("zero mass".into()));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Self::new(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![T::one() / T::from_count(n); n],
        }
    }

    pub fn pure(n: usize, i: usize) -> Self {
        let mut probs = vec![T::zero(); n];
        probs[i] = T::one();
        Self { probs }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> T {
        entropy(&self.probs)
    }

    /// Indices with probability at or above [`SUPPORT_THRESHOLD`].
    pub fn support(&self) -> Vec<usize> {
        let thr = T::lit(SUPPORT_THRESHOLD);
        (0..self.probs.len()).filter(|&i| self.probs[i] >= thr).collect()
    }

    /// Probabilities with sub-threshold entries reported as exactly zero.
    pub fn thresholded(&self) -> Vec<T> {
        let thr = T::lit(SUPPORT_THRESHOLD);
        self.probs
            .iter()
            .map(|&p| if p < thr { T::zero() } else { p })
            .collect()
    }

    /// Zero-padded to length `n` (`n >= len`).
    pub fn padded(&self, n: usize) -> Self {
        let mut probs = self.probs.clone();
        probs.resize(n.max(probs.len()), T::zero());
        Self { probs }
    }
}

/// Fixed 6-decimal formatting; never prints a negative zero.
pub fn fmt6<T: Scalar>(v: T) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// CSV with a header of column labels and a leading column of row labels.
pub fn write_csv<T: Scalar>(row_labels: &[String], col_labels: &[String], m: &Matrix<T>) -> String {
    let mut out = String::from("label");
    for c in col_labels {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, r) in row_labels.iter().enumerate() {
        out.push_str(r);
        for j in 0..m.cols() {
            let _ = write!(out, ",{}", fmt6(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Row labels, column labels, values.
pub type LabeledMatrix<T> = (Vec<String>, Vec<String>, Matrix<T>);

/// Parses the format written by [`write_csv`].
pub fn parse_csv<T: Scalar>(text: &str) -> std::result::Result<LabeledMatrix<T>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty csv")?;
    let col_labels: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let mut cells = line.split(',');
        row_labels.push(cells.next().unwrap_or_default().trim().to_string());
        let row = cells
            .map(|c| {
                c.trim()
                    .parse::<T>()
                    .map_err(|_| format!("row {}: bad number {c:?}", ln + 1))
            })
            .collect::<std::result::Result<Vec<T>, String>>()?;
        if row.len() != col_labels.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                ln + 1,
                row.len(),
                col_labels.len()
            ));
        }
        rows.push(row);
    }
    let m = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
    let m = if rows.is_empty() {
        Matrix::zeros(0, col_labels.len())
    } else {
        m
    };
    Ok((row_labels, col_labels, m))
}
