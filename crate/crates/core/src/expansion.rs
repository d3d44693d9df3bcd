//! The cyclic α-expansion step and a plain iterative QAP solver on top of it.
//!
//! For disjoint cycles `c_1..c_m` and a current permutation `P_0`, every
//! candidate `P(α) = (∏ c_i^{α_i})·P_0` can be written additively as
//! `P_0 + Σ α_i C_i` with `C_i = (c_i - I)·P_0`. Expanding the bilinear
//! energy gives `E(P(α)) = E(P_0) + αᵀ·W̃·α`, so choosing the best subset of
//! cycles is a QUBO over `m` variables.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_size, Error, Result};
use crate::instance::{
    bilinear_unchecked, cycle_to_sparse_delta, energy, MatchCost, Matrix, SparseMatchMatrix,
};
use crate::perm::{apply_cycles, CycleSet, Permutation};
use crate::qubo::{self, BackendConfig, Qubo};

/// Passes over all 2-cycles used by [`solve_random_cycles`] by default.
pub const DEFAULT_PASSES: usize = 3;

/// Evaluates `P_0 + Σ α_i (c_i - I)·P_0` entrywise and reads the result back
/// as a permutation.
pub fn parametrize_additive(
    cycles: &CycleSet,
    alpha: &[bool],
    p0: &Permutation,
) -> Result<Permutation> {
    check_size(cycles.n(), p0.len())?;
    check_size(cycles.len(), alpha.len())?;
    let n = p0.len();
    let mut acc: HashMap<(usize, usize), f64> = SparseMatchMatrix::from_permutation(p0)
        .entries()
        .iter()
        .map(|&(r, c, w)| ((r, c), w))
        .collect();
    for (cycle, _) in cycles.cycles().iter().zip(alpha).filter(|(_, &a)| a) {
        for &(r, c, w) in cycle_to_sparse_delta(cycle, p0)?.entries() {
            *acc.entry((r, c)).or_default() += w;
        }
    }
    let mut map = vec![usize::MAX; n];
    for ((r, c), w) in acc {
        if w == 0.0 {
            continue;
        }
        if w != 1.0 || map[c] != usize::MAX {
            return Err(Error::validation(
                "additive parametrization did not produce a permutation matrix",
            ));
        }
        map[c] = r;
    }
    if map.contains(&usize::MAX) {
        return Err(Error::validation("a source lost its assignment"));
    }
    Permutation::new(map)
}

/// Builds `W̃` for the given cycles around `p0`:
/// off-diagonal entries are `E(C_i, C_j)` averaged with `E(C_j, C_i)`, and the
/// diagonal is `E(C_i, C_i) + E(C_i, P_0) + E(P_0, C_i)`.
pub fn build_qubo<C: MatchCost + ?Sized>(
    cost: &C,
    p0: &Permutation,
    cycles: &CycleSet,
) -> Result<Qubo> {
    check_size(cost.size(), p0.len())?;
    check_size(cost.size(), cycles.n())?;
    let base = SparseMatchMatrix::from_permutation(p0);
    let deltas = cycles
        .cycles()
        .iter()
        .map(|c| cycle_to_sparse_delta(c, p0))
        .collect::<Result<Vec<_>>>()?;
    let m = deltas.len();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let ci = deltas[i].entries();
            (0..m)
                .map(|j| {
                    let cj = deltas[j].entries();
                    if i == j {
                        bilinear_unchecked(cost, ci, ci)
                            + bilinear_unchecked(cost, ci, base.entries())
                            + bilinear_unchecked(cost, base.entries(), ci)
                    } else {
                        0.5 * (bilinear_unchecked(cost, ci, cj) + bilinear_unchecked(cost, cj, ci))
                    }
                })
                .collect()
        })
        .collect();
    Qubo::new(Matrix::from_rows(rows)?)
}

/// One α-expansion move.
#[derive(Clone, Debug)]
pub struct ExpansionStep {
    pub cycles: CycleSet,
    pub p0: Permutation,
    pub qubo: Qubo,
    pub chosen_alpha: Vec<bool>,
    pub energy_before: f64,
    pub energy_after: f64,
    pub result: Permutation,
}

impl ExpansionStep {
    pub fn accepted(&self) -> bool {
        self.chosen_alpha.iter().any(|&a| a)
    }
}

/// Builds and solves the QUBO for `cycles`, then applies the best sampled
/// subset. Only strictly improving subsets are applied; otherwise `α = 0`.
pub fn expand_step<C: MatchCost + ?Sized>(
    cost: &C,
    p0: &Permutation,
    cycles: &CycleSet,
    backend: &BackendConfig,
    seed: u64,
) -> Result<ExpansionStep> {
    let e0 = energy(cost, p0)?;
    expand_step_from(cost, p0, e0, cycles, backend, seed)
}

/// [`expand_step`] with the energy of `p0` already known.
pub(crate) fn expand_step_from<C: MatchCost + ?Sized>(
    cost: &C,
    p0: &Permutation,
    energy_before: f64,
    cycles: &CycleSet,
    backend: &BackendConfig,
    seed: u64,
) -> Result<ExpansionStep> {
    let qubo = build_qubo(cost, p0, cycles)?;
    let samples = qubo::solve(&qubo, backend, seed)?;
    let best = samples.best();
    let tol = 1e-12 * qubo.max_abs().max(1.0);
    let (chosen_alpha, gain) = if best.energy < -tol {
        (best.bits.clone(), best.energy)
    } else {
        (vec![false; cycles.len()], 0.0)
    };
    let result = apply_cycles(cycles, &chosen_alpha, p0)?;
    Ok(ExpansionStep {
        cycles: cycles.clone(),
        p0: p0.clone(),
        qubo,
        chosen_alpha,
        energy_before,
        energy_after: energy_before + gain,
        result,
    })
}

/// One line of a solver trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub energy: f64,
    /// Number of QUBO variables in this step (0 for bookkeeping records).
    pub m: usize,
    #[serde(with = "crate::qubo::bits")]
    pub accepted_bits: Vec<bool>,
    /// Problem size, when the record describes a whole iterate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrace {
    pub steps: Vec<TraceRecord>,
    pub final_perm: Permutation,
    pub final_energy: f64,
}

impl SolveTrace {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("plain numeric data serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<TraceRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].energy <= w[0].energy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCycleConfig {
    pub passes: usize,
    pub backend: BackendConfig,
    pub seed: u64,
}

impl Default for RandomCycleConfig {
    fn default() -> Self {
        RandomCycleConfig {
            passes: DEFAULT_PASSES,
            backend: BackendConfig::default(),
            seed: 0,
        }
    }
}

/// Draws rounds of disjoint pairs over `domain` until every unordered pair
/// has been drawn at least once. Each round shuffles the uncovered pairs,
/// takes a greedy disjoint subset, then pairs up the remaining free indices
/// at random.
pub struct PairCoverage {
    domain: Vec<usize>,
    uncovered: Vec<(usize, usize)>,
    covered: Vec<bool>,
}

impl PairCoverage {
    pub fn new(domain: Vec<usize>) -> Self {
        let d = domain.len();
        let uncovered = (0..d)
            .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
            .collect();
        PairCoverage {
            domain,
            uncovered,
            covered: vec![false; d * d],
        }
    }

    pub fn is_done(&self) -> bool {
        self.uncovered.is_empty()
    }

    /// Next round as pairs of domain values, or `None` once all are covered.
    pub fn next_round<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Vec<(usize, usize)>> {
        if self.uncovered.is_empty() {
            return None;
        }
        let d = self.domain.len();
        let mut used = vec![false; d];
        let mut round = Vec::with_capacity(d / 2);
        self.uncovered.shuffle(rng);
        for &(a, b) in &self.uncovered {
            if !used[a] && !used[b] {
                used[a] = true;
                used[b] = true;
                round.push((a, b));
            }
        }
        let mut free: Vec<usize> = (0..d).filter(|&a| !used[a]).collect();
        free.shuffle(rng);
        for pair in free.chunks_exact(2) {
            round.push((pair[0].min(pair[1]), pair[0].max(pair[1])));
        }
        for &(a, b) in &round {
            self.covered[a * d + b] = true;
        }
        let covered = &self.covered;
        self.uncovered.retain(|&(a, b)| !covered[a * d + b]);
        Some(
            round
                .into_iter()
                .map(|(a, b)| (self.domain[a], self.domain[b]))
                .collect(),
        )
    }
}

/// Iterates α-expansion over random sets of disjoint 2-cycles. Each pass
/// draws sets until every 2-cycle has appeared once; the run stops after
/// `passes` passes or after a pass that changes nothing.
pub fn solve_random_cycles<C: MatchCost + ?Sized>(
    cost: &C,
    p_init: &Permutation,
    config: &RandomCycleConfig,
) -> Result<SolveTrace> {
    let n = cost.size();
    check_size(n, p_init.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut p = p_init.clone();
    let mut e = energy(cost, &p)?;
    let mut steps = vec![TraceRecord {
        iter: 0,
        energy: e,
        m: 0,
        accepted_bits: Vec::new(),
        n: Some(n),
    }];
    let mut iter = 0;
    for _ in 0..config.passes {
        let mut changed = false;
        let mut coverage = PairCoverage::new((0..n).collect());
        while let Some(pairs) = coverage.next_round(&mut rng) {
            let cycles = CycleSet::from_pairs(n, &pairs)?;
            let seed = rng.gen();
            let step = expand_step_from(cost, &p, e, &cycles, &config.backend, seed)?;
            iter += 1;
            if step.accepted() {
                changed = true;
                p = step.result;
                e = step.energy_after;
            }
            steps.push(TraceRecord {
                iter,
                energy: e,
                m: cycles.len(),
                accepted_bits: step.chosen_alpha,
                n: None,
            });
        }
        if !changed {
            break;
        }
    }
    let final_energy = energy(cost, &p)?;
    Ok(SolveTrace {
        steps,
        final_perm: p,
        final_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::QapInstance;
    use crate::perm::compose;

    fn three_point() -> QapInstance {
        let src = Matrix::from_rows(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ])
        .unwrap();
        let tgt = src.relabel(&Permutation::new(vec![1, 0, 2]).unwrap());
        QapInstance::isometric(src, tgt).unwrap()
    }

    fn random_disjoint_cycles(n: usize, rng: &mut impl Rng) -> CycleSet {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let mut cycles = Vec::new();
        let mut rest = &idx[..];
        while rest.len() >= 2 {
            let len = rng.gen_range(2..=rest.len().min(4));
            cycles.push(rest[..len].to_vec());
            rest = &rest[len..];
            if rng.gen_bool(0.3) {
                rest = &rest[1.min(rest.len())..];
            }
        }
        CycleSet::new(n, cycles).unwrap()
    }

    #[test]
    fn additive_basics() {
        let p0 = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let cs = CycleSet::from_pairs(4, &[(0, 3), (1, 2)]).unwrap();
        assert_eq!(parametrize_additive(&cs, &[false, false], &p0).unwrap(), p0);
        let one = CycleSet::from_pairs(4, &[(0, 3)]).unwrap();
        let c = one.product();
        assert_eq!(
            parametrize_additive(&one, &[true], &p0).unwrap(),
            compose(&c, &p0).unwrap()
        );
    }

    #[test]
    fn additive_equals_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.gen_range(2..=12);
            let p0 = Permutation::random(n, &mut rng);
            let cs = random_disjoint_cycles(n, &mut rng);
            let alpha: Vec<bool> = (0..cs.len()).map(|_| rng.gen()).collect();
            assert_eq!(
                parametrize_additive(&cs, &alpha, &p0).unwrap(),
                apply_cycles(&cs, &alpha, &p0).unwrap()
            );
        }
    }

    #[test]
    fn disjoint_cycle_deltas_annihilate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.gen_range(4..=9);
            let cs = random_disjoint_cycles(n, &mut rng);
            let minus_id = |c: &[usize]| {
                let mut d = Permutation::from_cycle(n, c).unwrap().to_dense();
                for (i, row) in d.iter_mut().enumerate() {
                    row[i] -= 1;
                }
                d
            };
            for a in 0..cs.len() {
                for b in (0..cs.len()).filter(|&b| b != a) {
                    let x = minus_id(cs.cycle(a));
                    let y = minus_id(cs.cycle(b));
                    for r in 0..n {
                        for c in 0..n {
                            let v: i64 = (0..n).map(|t| x[r][t] * y[t][c]).sum();
                            assert_eq!(v, 0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn three_point_qubo() {
        let inst = three_point();
        let cs = CycleSet::from_pairs(3, &[(0, 1)]).unwrap();
        let q = build_qubo(&inst, &Permutation::identity(3), &cs).unwrap();
        assert_eq!(q.coeff().rows(), vec![vec![-4.0]]);

        let step = expand_step(&inst, &Permutation::identity(3), &cs, &BackendConfig::Exhaustive, 0)
            .unwrap();
        assert_eq!(step.energy_before, 4.0);
        assert_eq!(step.energy_after, 0.0);
        assert_eq!(step.result.as_slice(), &[1, 0, 2]);
    }

    #[test]
    fn perfect_isometry_has_nonnegative_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Matrix::from_fn(6, |i, j| if i == j { 0.0 } else { ((i + j) % 4) as f64 + 1.0 });
        let inst = QapInstance::isometric(d.clone(), d).unwrap();
        for _ in 0..10 {
            let cs = random_disjoint_cycles(6, &mut rng);
            let q = build_qubo(&inst, &Permutation::identity(6), &cs).unwrap();
            assert!((0..q.m()).all(|i| q.get(i, i) >= 0.0));
            let step =
                expand_step(&inst, &Permutation::identity(6), &cs, &BackendConfig::Exhaustive, 0)
                    .unwrap();
            assert!(step.result.is_identity());
            assert!(!step.accepted());
        }
    }

    #[test]
    fn qubo_identity_random_factored() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Matrix::from_fn(8, |_, _| rng.gen_range(0..10) as f64);
        let b = Matrix::from_fn(8, |_, _| rng.gen_range(0..10) as f64);
        let inst = QapInstance::factored(a, b).unwrap();
        let p0 = Permutation::random(8, &mut rng);
        let cs = CycleSet::new(8, vec![vec![0, 5], vec![1, 2, 7], vec![3, 6]]).unwrap();
        let q = build_qubo(&inst, &p0, &cs).unwrap();
        let e0 = energy(&inst, &p0).unwrap();
        for v in 0..8u32 {
            let alpha: Vec<bool> = (0..3).map(|i| v >> i & 1 == 1).collect();
            let p = parametrize_additive(&cs, &alpha, &p0).unwrap();
            assert_eq!(energy(&inst, &p).unwrap() - e0, q.objective(&alpha));
        }
    }

    #[test]
    fn coverage_small_domains() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cov = PairCoverage::new(vec![3, 7]);
        assert_eq!(cov.next_round(&mut rng), Some(vec![(3, 7)]));
        assert_eq!(cov.next_round(&mut rng), None);

        let mut cov = PairCoverage::new(vec![0, 1, 2, 3]);
        let mut rounds = 0;
        while let Some(r) = cov.next_round(&mut rng) {
            assert_eq!(r.len(), 2);
            rounds += 1;
        }
        assert!(rounds >= 3);
    }

    #[test]
    fn two_point_solve_takes_the_better_permutation() {
        let a = Matrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(vec![vec![0.0, 5.0], vec![1.0, 0.0]]).unwrap();
        let inst = QapInstance::factored(a, b).unwrap();
        let id = Permutation::identity(2);
        let swap = Permutation::new(vec![1, 0]).unwrap();
        let best = energy(&inst, &id).unwrap().min(energy(&inst, &swap).unwrap());
        for start in [id, swap] {
            let trace = solve_random_cycles(
                &inst,
                &start,
                &RandomCycleConfig {
                    backend: BackendConfig::Exhaustive,
                    ..RandomCycleConfig::default()
                },
            )
            .unwrap();
            assert_eq!(trace.final_energy, best);
        }
    }

    #[test]
    fn trace_jsonl_round_trip() {
        let inst = three_point();
        let trace = solve_random_cycles(
            &inst,
            &Permutation::identity(3),
            &RandomCycleConfig {
                backend: BackendConfig::annealing(20),
                ..RandomCycleConfig::default()
            },
        )
        .unwrap();
        assert!(trace.is_monotone());
        let text = trace.to_jsonl();
        assert!(text.lines().next().unwrap().starts_with(r#"{"iter":0,"#));
        assert_eq!(SolveTrace::parse_jsonl(&text).unwrap(), trace.steps);
        assert_eq!(trace.final_energy, 0.0);
    }
}
