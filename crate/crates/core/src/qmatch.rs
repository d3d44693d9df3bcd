//! Isometric shape matching by repeated α-expansion on the worst matches.
//!
//! Each outer iteration scores every vertex by how badly its match distorts
//! distances, restricts the problem to the `k` worst targets (with all other
//! matches frozen and folded into a `k²×k²` table), and runs α-expansion over
//! random sets of 2-cycles on that small table until every 2-cycle among the
//! worst targets has been tried.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::expansion::{expand_step_from, PairCoverage, SolveTrace, TraceRecord};
use crate::instance::{energy, MatchCost, QapInstance};
use crate::perm::{CycleSet, Permutation};
use crate::qubo::{BackendConfig, EXHAUSTIVE_LIMIT};

pub const DEFAULT_K_WORST: usize = 40;
pub const DEFAULT_MAX_OUTER_ITERS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceReport {
    pub scores_src: Vec<f64>,
    pub scores_tgt: Vec<f64>,
    pub worst_src: Vec<usize>,
    pub worst_tgt: Vec<usize>,
}

/// Per-vertex distortion under `p` on both shapes, plus the `k_half`
/// highest-scoring vertices of each (ties go to the smaller index).
pub fn influence(inst: &QapInstance, p: &Permutation, k_half: usize) -> Result<InfluenceReport> {
    let QapInstance::Isometric { src, tgt } = inst else {
        return Err(Error::capability(
            "vertex influence needs an isometric instance with both distance matrices",
        ));
    };
    let n = inst.n();
    check_size(n, p.len())?;
    let inv = p.inverse();
    let scores_src: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| {
            let pv = p.apply(v);
            (0..n)
                .map(|w| (src.get(v, w) - tgt.get(pv, p.apply(w))).abs())
                .sum()
        })
        .collect();
    let scores_tgt: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|u| {
            let iu = inv.apply(u);
            (0..n)
                .map(|w| (tgt.get(u, w) - src.get(iu, inv.apply(w))).abs())
                .sum()
        })
        .collect();
    let k_half = k_half.min(n);
    Ok(InfluenceReport {
        worst_src: ranked(&scores_src)[..k_half].to_vec(),
        worst_tgt: ranked(&scores_tgt)[..k_half].to_vec(),
        scores_src,
        scores_tgt,
    })
}

/// Indices by descending score, ties by ascending index.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Target-side working set of size `min(k, n)`: the images of the worst
/// sources together with the worst targets, then the remaining targets, each
/// group ordered by target influence.
pub fn working_set(report: &InfluenceReport, p: &Permutation, k: usize) -> Vec<usize> {
    let n = p.len();
    let mut chosen = vec![false; n];
    for &v in &report.worst_src {
        chosen[p.apply(v)] = true;
    }
    for &u in &report.worst_tgt {
        chosen[u] = true;
    }
    let order = ranked(&report.scores_tgt);
    let mut out: Vec<usize> = order.iter().copied().filter(|&u| chosen[u]).collect();
    out.extend(order.iter().copied().filter(|&u| !chosen[u]));
    out.truncate(k.min(n));
    out
}

/// The QAP restricted to a set of free targets, with every other match held
/// fixed.
///
/// Local source `a` is the source currently sent to `subset[a]`, so the base
/// permutation is the local identity. Cross terms between a free match and
/// the frozen matches only depend on that one free match, so they are folded
/// onto the diagonal of the table; energy differences between
/// sub-permutations then equal the full-problem differences.
#[derive(Clone, Debug)]
pub struct SubproblemMatrix {
    subset: Vec<usize>,
    sources: Vec<usize>,
    table: Vec<f64>,
    base_perm: Permutation,
}

pub fn build_subproblem<C: MatchCost + ?Sized>(
    cost: &C,
    p: &Permutation,
    subset: &[usize],
) -> Result<SubproblemMatrix> {
    let n = cost.size();
    check_size(n, p.len())?;
    let mut in_subset = vec![false; n];
    for &t in subset {
        if t >= n {
            return Err(Error::validation(format!(
                "subset index {t} is out of range for n = {n}"
            )));
        }
        if std::mem::replace(&mut in_subset[t], true) {
            return Err(Error::validation(format!("subset index {t} is repeated")));
        }
    }
    let k = subset.len();
    let inv = p.inverse();
    let sources: Vec<usize> = subset.iter().map(|&t| inv.apply(t)).collect();
    let fixed: Vec<usize> = (0..n).filter(|&v| !in_subset[p.apply(v)]).collect();

    let kk = k * k;
    let mut table = vec![0.0; kk * kk];
    table
        .par_chunks_mut(kk.max(1))
        .enumerate()
        .for_each(|(ab, row)| {
            let (a, b) = (ab / k, ab % k);
            let (i, t) = (sources[a], subset[b]);
            for c in 0..k {
                for d in 0..k {
                    row[c * k + d] = cost.pair_cost(i, t, sources[c], subset[d]);
                }
            }
            let absorbed: f64 = fixed
                .iter()
                .map(|&v| {
                    let pv = p.apply(v);
                    cost.pair_cost(i, t, v, pv) + cost.pair_cost(v, pv, i, t)
                })
                .sum();
            row[ab] += absorbed;
        });

    Ok(SubproblemMatrix {
        subset: subset.to_vec(),
        sources,
        table,
        base_perm: p.clone(),
    })
}

impl SubproblemMatrix {
    pub fn k(&self) -> usize {
        self.subset.len()
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn base_perm(&self) -> &Permutation {
        &self.base_perm
    }

    /// The full permutation obtained by replacing the free matches with
    /// `local` (local source `a` goes to `subset[local(a)]`).
    pub fn lift(&self, local: &Permutation) -> Result<Permutation> {
        check_size(self.k(), local.len())?;
        let mut map = self.base_perm.as_slice().to_vec();
        for (a, &src) in self.sources.iter().enumerate() {
            map[src] = self.subset[local.apply(a)];
        }
        Permutation::new(map)
    }
}

impl MatchCost for SubproblemMatrix {
    fn size(&self) -> usize {
        self.k()
    }

    #[inline]
    fn pair_cost(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let k = self.k();
        self.table[((a * k + b) * k + c) * k + d]
    }
}

/// Draws disjoint 2-cycle sets over the working set until every pair of
/// working targets has been proposed once.
pub fn sample_worst_cycle_sets(
    report: &InfluenceReport,
    p: &Permutation,
    k: usize,
    seed: u64,
) -> Result<Vec<CycleSet>> {
    let targets = working_set(report, p, k);
    if targets.len() < 2 {
        return Err(Error::validation(format!(
            "need at least two working targets, got {}",
            targets.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coverage = PairCoverage::new(targets);
    let mut sets = Vec::new();
    while let Some(pairs) = coverage.next_round(&mut rng) {
        sets.push(CycleSet::from_pairs(p.len(), &pairs)?);
    }
    Ok(sets)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Identity,
    Random,
    /// Linear assignment on a vertex similarity matrix.
    Similarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QMatchConfig {
    pub k_worst: usize,
    pub backend: BackendConfig,
    pub max_outer_iters: usize,
    pub seed: u64,
    pub init: InitMode,
}

impl Default for QMatchConfig {
    fn default() -> Self {
        QMatchConfig {
            k_worst: DEFAULT_K_WORST,
            backend: BackendConfig::default(),
            max_outer_iters: DEFAULT_MAX_OUTER_ITERS,
            seed: 0,
            init: InitMode::default(),
        }
    }
}

impl QMatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_worst < 2 || !self.k_worst.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "k_worst must be even and at least 2, got {}",
                self.k_worst
            )));
        }
        if self.backend == BackendConfig::Exhaustive && self.k_worst > 2 * EXHAUSTIVE_LIMIT {
            return Err(Error::capability(format!(
                "k_worst = {} needs {} QUBO variables, beyond the exhaustive limit of {EXHAUSTIVE_LIMIT}",
                self.k_worst,
                self.k_worst / 2
            )));
        }
        self.backend.validate(0)
    }
}

/// Runs the worst-vertex α-expansion loop until an outer iteration leaves the
/// permutation unchanged or `max_outer_iters` is reached. Trace energies are
/// global energies.
pub fn qmatch_run(
    inst: &QapInstance,
    p_init: &Permutation,
    config: &QMatchConfig,
) -> Result<SolveTrace> {
    config.validate()?;
    if !matches!(inst, QapInstance::Isometric { .. }) {
        return Err(Error::capability("shape matching needs an isometric instance"));
    }
    let n = inst.n();
    check_size(n, p_init.len())?;
    let k = config.k_worst.min(n) & !1;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut p = p_init.clone();
    let mut e = energy(inst, &p)?;
    let mut steps = vec![TraceRecord {
        iter: 0,
        energy: e,
        m: 0,
        accepted_bits: Vec::new(),
        n: Some(n),
    }];
    let mut iter = 0;

    for _ in 0..config.max_outer_iters {
        if k < 2 {
            break;
        }
        let report = influence(inst, &p, k / 2)?;
        let targets = working_set(&report, &p, k);
        let sub = build_subproblem(inst, &p, &targets)?;
        let base_local = energy(&sub, &Permutation::identity(k))?;
        let mut local = Permutation::identity(k);
        let mut e_local = base_local;

        let mut coverage = PairCoverage::new((0..k).collect());
        while let Some(pairs) = coverage.next_round(&mut rng) {
            let cycles = CycleSet::from_pairs(k, &pairs)?;
            let step = expand_step_from(&sub, &local, e_local, &cycles, &config.backend, rng.gen())?;
            iter += 1;
            if step.accepted() {
                local = step.result;
                e_local = step.energy_after;
            }
            steps.push(TraceRecord {
                iter,
                energy: e + (e_local - base_local),
                m: cycles.len(),
                accepted_bits: step.chosen_alpha,
                n: None,
            });
        }

        if local.is_identity() {
            break;
        }
        p = sub.lift(&local)?;
        e += e_local - base_local;
    }

    let final_energy = energy(inst, &p)?;
    Ok(SolveTrace {
        steps,
        final_perm: p,
        final_energy,
    })
}
