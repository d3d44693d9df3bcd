use std::path::Path;

use super::geodesic::GeodesicMatrix;
use crate::error::{check_size, Error, Result};
use crate::perm::Permutation;

pub const HISTOGRAM_BINS: usize = 32;

/// `s[m][n]`: how similar source vertex `m` looks to target vertex `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != c {
                return Err(Error::validation(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("similarity entries must be finite"));
        }
        Ok(SimilarityMatrix { rows: r, cols: c, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Dense text, one row per line, values separated by whitespace or commas.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut width = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(i + 1, format!("cannot parse {t:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::parse(
                        i + 1,
                        format!("row has {} values, expected {w}", row.len()),
                    ))
                }
                _ => {}
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// Fallback descriptor similarity: each vertex is described by the histogram
/// of its geodesic distances to all other vertices, and similarity is the
/// negative Euclidean distance between histograms.
pub fn histogram_similarity(src: &GeodesicMatrix, tgt: &GeodesicMatrix) -> Result<SimilarityMatrix> {
    check_size(src.n(), tgt.n())?;
    let range = src.diameter().max(tgt.diameter());
    let hs = histograms(src, range);
    let ht = histograms(tgt, range);
    let rows = hs
        .iter()
        .map(|a| {
            ht.iter()
                .map(|b| {
                    -a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    SimilarityMatrix::from_rows(rows)
}

fn histograms(g: &GeodesicMatrix, range: f64) -> Vec<[f64; HISTOGRAM_BINS]> {
    let n = g.n();
    (0..n)
        .map(|v| {
            let mut h = [0.0; HISTOGRAM_BINS];
            for w in 0..n {
                let bin = if range > 0.0 {
                    ((g.get(v, w) / range * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
                } else {
                    0
                };
                h[bin] += 1.0 / n as f64;
            }
            h
        })
        .collect()
}

/// Permutation maximizing `Σ s[i][p(i)]` (Hungarian method with potentials).
pub fn lap_init(sim: &SimilarityMatrix) -> Result<Permutation> {
    let (n, c) = sim.shape();
    if n != c {
        return Err(Error::validation(format!(
            "similarity matrix must be square, got {n}×{c}"
        )));
    }
    // 1-based shortest augmenting path on cost = -s; column 0 is a sentinel.
    let cost = |i: usize, j: usize| -sim.get(i - 1, j - 1);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut map = vec![0; n];
    for j in 1..=n {
        map[row_of[j] - 1] = j - 1;
    }
    Permutation::new(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic::geodesics;
    use crate::geometry::mesh::TriangleMesh;
    use crate::instance::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn score(s: &SimilarityMatrix, p: &[usize]) -> f64 {
        p.iter().enumerate().map(|(i, &j)| s.get(i, j)).sum()
    }

    fn brute_force_best(s: &SimilarityMatrix) -> f64 {
        fn rec(s: &SimilarityMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            let n = used.len();
            if row == n {
                *best = best.max(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(s, row + 1, used, acc + s.get(row, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        rec(s, 0, &mut vec![false; s.shape().0], 0.0, &mut best);
        best
    }

    #[test]
    fn lap_identity_and_reversal() {
        let id = SimilarityMatrix::from_rows(
            (0..5).map(|i| (0..5).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
        )
        .unwrap();
        assert!(lap_init(&id).unwrap().is_identity());
        let anti = SimilarityMatrix::from_rows(
            (0..5).map(|i| (0..5).map(|j| f64::from(u8::from(i + j == 4))).collect()).collect(),
        )
        .unwrap();
        assert_eq!(lap_init(&anti).unwrap().as_slice(), &[4, 3, 2, 1, 0]);
    }

    #[test]
    fn lap_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 6, 8] {
            for _ in 0..4 {
                let s = SimilarityMatrix::from_rows(
                    (0..n).map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect(),
                )
                .unwrap();
                let p = lap_init(&s).unwrap();
                assert!((score(&s, p.as_slice()) - brute_force_best(&s)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lap_rejects_non_square() {
        let s = SimilarityMatrix::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        assert!(lap_init(&s).is_err());
    }

    #[test]
    fn parse_whitespace_and_csv() {
        let a = SimilarityMatrix::parse("1 2\n3 4\n").unwrap();
        let b = SimilarityMatrix::parse("1,2\n\n3, 4\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get(1, 0), 3.0);
        let err = SimilarityMatrix::parse("1 2\n3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(SimilarityMatrix::parse("1 x\n").is_err());
    }

    #[test]
    fn histogram_similarity_is_maximal_on_self() {
        let g = geodesics(&TriangleMesh::grid(3, 4)).unwrap();
        let s = histogram_similarity(&g, &g).unwrap();
        for i in 0..g.n() {
            assert_eq!(s.get(i, i), 0.0);
            assert!((0..g.n()).all(|j| s.get(i, j) <= 0.0));
        }
        let flat = GeodesicMatrix::new(Matrix::zeros(3)).unwrap();
        assert!(histogram_similarity(&flat, &flat).is_ok());
    }
}
