//! QAP energy oracles.
//!
//! The match "source `i` goes to target `k`" has flat index `i·n + k`, and the
//! energy of a permutation `p` is `Σ_{i,j} W[i·n+p(i), j·n+p(j)]` over all
//! ordered pairs including `i = j`.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{check_size, Error, Result};
use crate::perm::Permutation;

/// Largest size accepted for an explicit `n²×n²` cost matrix.
pub const MAX_DENSE_N: usize = 64;

/// Anything that can price a pair of matches.
pub trait MatchCost: Sync {
    fn size(&self) -> usize;

    /// `W[i·n+k, j·n+l]`: cost of matching `i → k` together with `j → l`.
    fn pair_cost(&self, i: usize, k: usize, j: usize, l: usize) -> f64;
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            check_size(n, row.len())?;
            data.extend(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Rows and columns restricted to `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// `out[a][b] = self[perm[a]][perm[b]]`.
    pub fn relabel(&self, perm: &Permutation) -> Matrix {
        Matrix::from_fn(self.n, |a, b| self.get(perm.apply(a), perm.apply(b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A quadratic assignment problem in one of three cost representations.
#[derive(Clone, Debug)]
pub enum QapInstance {
    /// Explicit `n²×n²` cost, row-major over flat match indices.
    LawlerDense { n: usize, w: Vec<f64> },
    /// Koopmans-Beckmann: `W[i·n+k, j·n+l] = a[i,j]·b[k,l]`.
    Factored { a: Matrix, b: Matrix },
    /// Distance preservation: `W[i·n+k, j·n+l] = |src[i,j] - tgt[k,l]|`.
    Isometric { src: Matrix, tgt: Matrix },
}

impl QapInstance {
    pub fn lawler(n: usize, w: Vec<f64>) -> Result<Self> {
        if n > MAX_DENSE_N {
            return Err(Error::capability(format!(
                "dense n²×n² cost is limited to n <= {MAX_DENSE_N} (got n = {n}); \
                 use a factored or isometric instance"
            )));
        }
        check_size(n * n * n * n, w.len())?;
        Ok(QapInstance::LawlerDense { n, w })
    }

    pub fn factored(a: Matrix, b: Matrix) -> Result<Self> {
        check_size(a.n(), b.n())?;
        Ok(QapInstance::Factored { a, b })
    }

    /// Both distance matrices must be symmetric with a zero diagonal.
    pub fn isometric(src: Matrix, tgt: Matrix) -> Result<Self> {
        check_size(src.n(), tgt.n())?;
        for (name, d) in [("source", &src), ("target", &tgt)] {
            let tol = 1e-9 * (1.0 + d.max_abs());
            if !d.is_symmetric(tol) {
                return Err(Error::validation(format!("{name} distances are not symmetric")));
            }
            if (0..d.n()).any(|i| d.get(i, i) != 0.0) {
                return Err(Error::validation(format!(
                    "{name} distances have a nonzero diagonal"
                )));
            }
            if (0..d.n()).any(|i| d.row(i).iter().any(|v| !(v.is_finite() && *v >= 0.0))) {
                return Err(Error::validation(format!(
                    "{name} distances must be finite and nonnegative"
                )));
            }
        }
        Ok(QapInstance::Isometric { src, tgt })
    }

    pub fn n(&self) -> usize {
        match self {
            QapInstance::LawlerDense { n, .. } => *n,
            QapInstance::Factored { a, .. } => a.n(),
            QapInstance::Isometric { src, .. } => src.n(),
        }
    }

    /// Explicit `n²×n²` cost matrix.
    pub fn to_dense(&self) -> Result<QapInstance> {
        let n = self.n();
        if n > MAX_DENSE_N {
            return Err(Error::capability(format!(
                "cannot materialize n²×n² cost for n = {n}"
            )));
        }
        let nn = n * n;
        let mut w = vec![0.0; nn * nn];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        w[(i * n + k) * nn + j * n + l] = self.pair_cost(i, k, j, l);
                    }
                }
            }
        }
        QapInstance::lawler(n, w)
    }
}

impl MatchCost for QapInstance {
    fn size(&self) -> usize {
        self.n()
    }

    #[inline]
    fn pair_cost(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        match self {
            QapInstance::LawlerDense { n, w } => {
                let nn = n * n;
                w[(i * n + k) * nn + j * n + l]
            }
            QapInstance::Factored { a, b } => a.get(i, j) * b.get(k, l),
            QapInstance::Isometric { src, tgt } => (src.get(i, j) - tgt.get(k, l)).abs(),
        }
    }
}

/// `E(p) = Σ_{i,j} W[i·n+p(i), j·n+p(j)]`.
pub fn energy<C: MatchCost + ?Sized>(cost: &C, p: &Permutation) -> Result<f64> {
    let n = cost.size();
    check_size(n, p.len())?;
    let map = p.as_slice();
    // Row sums are reduced in a fixed order so results do not depend on
    // thread scheduling.
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let k = map[i];
            (0..n).map(|j| cost.pair_cost(i, k, j, map[j])).sum::<f64>()
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Sparse `n×n` matrix over matches. Entry `(row, col)` is target `row`,
/// source `col`, matching the permutation-matrix convention.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatchMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatchMatrix {
    pub fn new(n: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for &(r, c, _) in &entries {
            if r >= n || c >= n {
                return Err(Error::validation(format!(
                    "entry ({r}, {c}) is out of range for n = {n}"
                )));
            }
            if !seen.insert((r, c)) {
                return Err(Error::validation(format!("duplicate entry ({r}, {c})")));
            }
        }
        Ok(SparseMatchMatrix { n, entries })
    }

    pub fn from_permutation(p: &Permutation) -> Self {
        SparseMatchMatrix {
            n: p.len(),
            entries: p
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &t)| (t, i, 1.0))
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for &(r, c, w) in &self.entries {
            m[r][c] += w;
        }
        m
    }
}

/// `vec(q)ᵀ W vec(r)`, touching `nnz(q)·nnz(r)` cost entries.
pub fn bilinear_energy<C: MatchCost + ?Sized>(
    cost: &C,
    q: &SparseMatchMatrix,
    r: &SparseMatchMatrix,
) -> Result<f64> {
    check_size(cost.size(), q.n())?;
    check_size(cost.size(), r.n())?;
    Ok(bilinear_unchecked(cost, q.entries(), r.entries()))
}

#[inline]
pub(crate) fn bilinear_unchecked<C: MatchCost + ?Sized>(
    cost: &C,
    q: &[(usize, usize, f64)],
    r: &[(usize, usize, f64)],
) -> f64 {
    let mut total = 0.0;
    for &(k, i, w1) in q {
        for &(l, j, w2) in r {
            total += w1 * w2 * cost.pair_cost(i, k, j, l);
        }
    }
    total
}

/// `(c - I)·p0` for a single cycle `c` over targets: each source currently
/// sent into the cycle gains `+1` at its new target and `-1` at its old one.
pub fn cycle_to_sparse_delta(cycle: &[usize], p0: &Permutation) -> Result<SparseMatchMatrix> {
    let n = p0.len();
    let c = Permutation::from_cycle(n, cycle)?;
    let inv = p0.inverse();
    let mut entries = Vec::with_capacity(2 * cycle.len());
    for &t in cycle {
        let src = inv.apply(t);
        entries.push((c.apply(t), src, 1.0));
        entries.push((t, src, -1.0));
    }
    Ok(SparseMatchMatrix { n, entries })
}
