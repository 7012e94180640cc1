//! Dense matrix helpers and dominant eigenpairs.
//!
//! Dimensions in this crate are small (a handful of states), so every routine
//! here favours robustness over asymptotic speed: the spectrum is obtained
//! from a real Schur decomposition and the dominant eigenvectors are then
//! polished by shifted inverse iteration.

use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Vector = DVector<f64>;

/// Relative spectral gap below which dominance is not certified.
pub const DEFAULT_GAP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty matrix sequence")]
    EmptySequence,
    #[error("no strictly dominant positive eigenvalue: {0}")]
    NoStrictDominance(String),
    #[error("eigenvector iteration did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// A finite real `n x n` matrix with `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(LinalgError::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn diag(entries: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.0 * x
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;

    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        SquareMatrix(&self.0 * &rhs.0)
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<crate::num::LenientF64>>::deserialize(d)?;
        let rows: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(f64::from).collect())
            .collect();
        SquareMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Ordered product of a switching word: `[A1, A2, ..., Ar]` yields
/// `Ar * ... * A2 * A1`, i.e. `A1` acts first.
pub fn matrix_product(sequence: &[SquareMatrix]) -> Result<SquareMatrix, LinalgError> {
    let first = sequence.first().ok_or(LinalgError::EmptySequence)?;
    let n = first.dim();
    let mut acc = first.clone();
    for m in &sequence[1..] {
        if m.dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: m.dim(),
            });
        }
        acc = m * &acc;
    }
    Ok(acc)
}

/// Dominant eigen-structure of a matrix: the dominant eigenvalue, its right
/// eigenvector `v` spanning the invariant line, and the left eigenvector `w`
/// whose orthogonal complement is the complementary invariant hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSplitting {
    pub lambda: f64,
    #[serde(serialize_with = "crate::num::ser_vector")]
    pub v: Vector,
    #[serde(serialize_with = "crate::num::ser_vector")]
    pub w: Vector,
    /// `|lambda_2| / |lambda_1|`.
    pub gap: f64,
}

impl InvariantSplitting {
    /// True when `x` lies (to `tol`) on the complementary hyperplane `w^T x = 0`.
    pub fn in_hyperplane(&self, x: &Vector, tol: f64) -> bool {
        self.w.dot(x).abs() <= tol * x.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub gap_eps: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            gap_eps: DEFAULT_GAP_EPS,
        }
    }
}

/// Eigenvalue moduli sorted in decreasing order, with the leading eigenvalue.
fn sorted_spectrum(a: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let eig = a.clone().complex_eigenvalues();
    let mut vals: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    vals.sort_by(|x, y| {
        let mx = x.0.hypot(x.1);
        let my = y.0.hypot(y.1);
        my.partial_cmp(&mx)
            .unwrap_or(std::cmp::Ordering::Equal)
            // prefer the real representative among equal moduli
            .then(x.1.abs().partial_cmp(&y.1.abs()).unwrap_or(std::cmp::Ordering::Equal))
    });
    vals
}

/// Shifted inverse iteration for an eigenvector of the known simple real
/// eigenvalue `lambda`. Returns a unit vector with relative residual `<= tol`.
fn eigenvector_for(
    a: &DMatrix<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vector, LinalgError> {
    let n = a.nrows();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let scale = lambda.abs().max(f64::MIN_POSITIVE);
    let mut shift = lambda + 1e-10 * scale;
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.173 * (i as f64 + 1.0).sqrt());
    x /= x.norm();
    for iter in 0..max_iter {
        let shifted = a - DMatrix::identity(n, n) * shift;
        let lu = shifted.lu();
        let y = match lu.solve(&x) {
            Some(y) if y.iter().all(|v| v.is_finite()) && y.norm() > 0.0 => y,
            _ => {
                // exactly singular: nudge the shift and retry
                shift += 1e-8 * scale * (iter as f64 + 1.0);
                continue;
            }
        };
        x = &y / y.norm();
        let r = a * &x - &x * lambda;
        if r.norm() <= tol * scale {
            return Ok(x);
        }
    }
    Err(LinalgError::NoConvergence(max_iter))
}

/// Dominant eigenpair and invariant splitting of `a`.
///
/// Fails with [`LinalgError::NoStrictDominance`] when the leading eigenvalue
/// is not real, not positive, or not separated from the next one by the
/// relative margin `opts.gap_eps`.
pub fn dominant_eigenpair(
    a: &SquareMatrix,
    opts: &EigenOptions,
) -> Result<InvariantSplitting, LinalgError> {
    let m = a.matrix();
    let n = a.dim();
    let spectrum = sorted_spectrum(m);
    let (re1, im1) = spectrum[0];
    let mod1 = re1.hypot(im1);
    if mod1 == 0.0 {
        return Err(LinalgError::NoStrictDominance("spectral radius is zero".into()));
    }
    let gap = if n > 1 {
        let (re2, im2) = spectrum[1];
        re2.hypot(im2) / mod1
    } else {
        0.0
    };
    if gap > 1.0 - opts.gap_eps {
        return Err(LinalgError::NoStrictDominance(format!(
            "leading eigenvalues tie in modulus (ratio {gap:.3e})"
        )));
    }
    if im1.abs() > opts.gap_eps * mod1 {
        return Err(LinalgError::NoStrictDominance(
            "leading eigenvalue is not real".into(),
        ));
    }
    if re1 <= 0.0 {
        return Err(LinalgError::NoStrictDominance(format!(
            "leading eigenvalue {re1} is not positive"
        )));
    }

    let mut v = eigenvector_for(m, re1, opts.tol, opts.max_iter)?;
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v = -v;
    }
    let mut w = eigenvector_for(&m.transpose(), re1, opts.tol, opts.max_iter)?;
    let wv = w.dot(&v);
    if wv.abs() <= opts.tol {
        return Err(LinalgError::NoStrictDominance(
            "left and right dominant eigenvectors are orthogonal".into(),
        ));
    }
    if wv < 0.0 {
        w = -w;
    }
    // two-sided Rayleigh quotient: second-order accurate in the vector errors
    let lambda = w.dot(&(m * &v)) / w.dot(&v);

    Ok(InvariantSplitting { lambda, v, w, gap })
}

/// Numerical rank of a set of vectors by Gaussian elimination with complete
/// pivoting; each vector is normalized before elimination.
pub fn rank<'a, I>(vectors: I, dim: usize, tol: f64) -> usize
where
    I: IntoIterator<Item = &'a Vector>,
{
    let mut rows: Vec<Vec<f64>> = vectors
        .into_iter()
        .filter_map(|v| {
            let n = v.norm();
            (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
        })
        .collect();
    let mut rank = 0;
    let mut cols: Vec<usize> = (0..dim).collect();
    while rank < rows.len() && !cols.is_empty() {
        let mut best = (0.0, 0, 0);
        for (ri, row) in rows.iter().enumerate().skip(rank) {
            for (ci, &c) in cols.iter().enumerate() {
                if row[c].abs() > best.0 {
                    best = (row[c].abs(), ri, ci);
                }
            }
        }
        if best.0 <= tol {
            break;
        }
        rows.swap(rank, best.1);
        let col = cols.swap_remove(best.2);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)`.
pub fn orthogonal_complement(vectors: &[Vector], dim: usize, tol: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    let push = |v: &Vector, basis: &mut Vec<Vector>| -> bool {
        let mut u = v.clone();
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dot(&u);
                u -= b * c;
            }
        }
        let n = u.norm();
        if n > tol {
            basis.push(u / n);
            true
        } else {
            false
        }
    };
    for v in vectors {
        let n = v.norm();
        if n > 0.0 {
            push(&(v / n), &mut basis);
        }
    }
    let span_dim = basis.len();
    for i in 0..dim {
        push(&Vector::from_fn(dim, |j, _| if j == i { 1.0 } else { 0.0 }), &mut basis);
    }
    basis.split_off(span_dim)
}
