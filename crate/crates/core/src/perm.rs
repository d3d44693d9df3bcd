//! Permutations and sets of disjoint cycles.
//!
//! A [`Permutation`] stores `map[i]`, the target that source `i` is sent to.
//! As a 0/1 matrix it has entry `(map[i], i) = 1`, so composing permutations
//! is the same as multiplying their matrices: `compose(q, r)` is `Q·R`, with
//! `r` applied first.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PermutationRepr", into = "PermutationRepr")]
pub struct Permutation {
    map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PermutationRepr {
    n: usize,
    map: Vec<usize>,
}

impl TryFrom<PermutationRepr> for Permutation {
    type Error = Error;

    fn try_from(repr: PermutationRepr) -> Result<Self> {
        check_size(repr.n, repr.map.len())?;
        Permutation::new(repr.map)
    }
}

impl From<Permutation> for PermutationRepr {
    fn from(p: Permutation) -> Self {
        PermutationRepr {
            n: p.len(),
            map: p.map,
        }
    }
}

impl Permutation {
    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for (i, &t) in map.iter().enumerate() {
            if t >= n {
                return Err(Error::validation(format!(
                    "map[{i}] = {t} is out of range for n = {n}"
                )));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::validation(format!("target {t} is hit twice")));
            }
        }
        Ok(Permutation { map })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    /// Builds the permutation of `n` points that acts as `cycle`:
    /// `cycle[t] -> cycle[t + 1]`, wrapping around.
    pub fn from_cycle(n: usize, cycle: &[usize]) -> Result<Self> {
        CycleSet::new(n, vec![cycle.to_vec()]).map(|c| c.product())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.map
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &t)| i == t)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &t) in self.map.iter().enumerate() {
            inv[t] = i;
        }
        Permutation { map: inv }
    }

    /// Number of sources whose target differs between `self` and `other`.
    pub fn hamming(&self, other: &Permutation) -> usize {
        self.map
            .iter()
            .zip(&other.map)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Cycle decomposition, omitting fixed points. Each cycle starts at its
    /// smallest element and cycles are ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut visited = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if visited[start] || self.map[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                cycle.push(i);
                i = self.map[i];
            }
            out.push(cycle);
        }
        out
    }

    /// 0/1 matrix, row-major, with entry `(map[i], i) = 1`.
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let n = self.len();
        let mut m = vec![vec![0; n]; n];
        for (i, &t) in self.map.iter().enumerate() {
            m[t][i] = 1;
        }
        m
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.map)
    }
}

/// `i ↦ q[r[i]]`: `r` is applied first.
pub fn compose(q: &Permutation, r: &Permutation) -> Result<Permutation> {
    check_size(q.len(), r.len())?;
    Ok(Permutation {
        map: r.map.iter().map(|&t| q.map[t]).collect(),
    })
}

/// Pairwise-disjoint cycles over `0..n`, each of length at least two.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSet {
    n: usize,
    cycles: Vec<Vec<usize>>,
}

impl CycleSet {
    pub fn new(n: usize, cycles: Vec<Vec<usize>>) -> Result<Self> {
        let mut used = vec![false; n];
        for cycle in &cycles {
            if cycle.len() < 2 {
                return Err(Error::validation(format!(
                    "cycle {cycle:?} has fewer than two elements"
                )));
            }
            for &i in cycle {
                if i >= n {
                    return Err(Error::validation(format!(
                        "cycle index {i} is out of range for n = {n}"
                    )));
                }
                if std::mem::replace(&mut used[i], true) {
                    return Err(Error::validation(format!(
                        "index {i} appears in more than one place; cycles must be disjoint"
                    )));
                }
            }
        }
        Ok(CycleSet { n, cycles })
    }

    /// Disjoint transpositions.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(a, b)| vec![a, b]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cycles, i.e. the number of binary decision variables.
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn cycle(&self, idx: usize) -> &[usize] {
        &self.cycles[idx]
    }

    /// Product of the selected cycles, as a permutation.
    pub fn selected_product(&self, alpha: &[bool]) -> Result<Permutation> {
        check_size(self.len(), alpha.len())?;
        let mut map: Vec<usize> = (0..self.n).collect();
        for (cycle, _) in self.cycles.iter().zip(alpha).filter(|(_, &a)| a) {
            for (t, &i) in cycle.iter().enumerate() {
                map[i] = cycle[(t + 1) % cycle.len()];
            }
        }
        Ok(Permutation { map })
    }

    /// Product of all cycles.
    pub fn product(&self) -> Permutation {
        self.selected_product(&vec![true; self.len()])
            .expect("alpha has one entry per cycle")
    }
}

/// `(∏ c_i^{α_i}) · p0`. The selected cycles permute targets.
pub fn apply_cycles(cycles: &CycleSet, alpha: &[bool], p0: &Permutation) -> Result<Permutation> {
    check_size(cycles.n(), p0.len())?;
    let selected = cycles.selected_product(alpha)?;
    compose(&selected, p0)
}

/// Splits `p` into two involutions `(q, r)` with `compose(q, r) == p`.
///
/// Each cycle `(e_0 e_1 … e_{k-1})` is handled on its own: `r` reflects
/// positions as `t ↦ -t (mod k)` and `q` as `t ↦ 1 - t (mod k)`, so that
/// `q(r(t)) = t + 1`. For `k = 4` this gives `q = (e_0 e_1)(e_2 e_3)` and
/// `r = (e_1 e_3)`.
pub fn decompose_involutions(p: &Permutation) -> (Permutation, Permutation) {
    let n = p.len();
    let mut q: Vec<usize> = (0..n).collect();
    let mut r: Vec<usize> = (0..n).collect();
    for cycle in p.cycles() {
        let k = cycle.len();
        for t in 0..k {
            r[cycle[t]] = cycle[(k - t) % k];
            q[cycle[t]] = cycle[(k + 1 - t) % k];
        }
    }
    (Permutation { map: q }, Permutation { map: r })
}
