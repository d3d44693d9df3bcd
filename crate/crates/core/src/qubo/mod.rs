//! QUBO and Ising problem types plus the classical samplers that stand in
//! for an annealer.
//!
//! A [`Qubo`] minimizes `αᵀ·W̃·α` over `α ∈ {0,1}^m`; linear terms live on
//! the diagonal. Every backend returns a [`SampleSet`] sorted by energy, with
//! ties broken by the lexicographically smallest bit vector.

mod anneal;
mod exhaustive;
mod tabu;

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use anneal::AnnealParams;
pub use tabu::TabuParams;

use crate::error::{check_size, Error, Result};
use crate::instance::Matrix;

/// Largest QUBO the exhaustive backend accepts.
pub const EXHAUSTIVE_LIMIT: usize = 25;

/// Read count used when no other is given.
pub const DEFAULT_READS: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct Qubo {
    coeff: Matrix,
}

#[derive(Serialize, Deserialize)]
struct QuboFile {
    m: usize,
    coeff: Vec<Vec<f64>>,
}

impl Qubo {
    /// Symmetrizes `coeff` as `(C + Cᵀ)/2`, which leaves the objective unchanged.
    pub fn new(coeff: Matrix) -> Result<Self> {
        let m = coeff.n();
        for i in 0..m {
            if coeff.row(i).iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("row {i} has a non-finite coefficient")));
            }
        }
        let sym = Matrix::from_fn(m, |i, j| {
            if i == j {
                coeff.get(i, i)
            } else {
                0.5 * (coeff.get(i, j) + coeff.get(j, i))
            }
        });
        Ok(Qubo { coeff: sym })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Qubo::new(Matrix::from_rows(rows)?)
    }

    /// Parses `{"m": int, "coeff": [[...], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: QuboFile = serde_json::from_str(text)?;
        check_size(file.m, file.coeff.len())?;
        Qubo::from_rows(file.coeff)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&QuboFile {
            m: self.m(),
            coeff: self.coeff.rows(),
        })
        .expect("plain numeric data serializes")
    }

    pub fn m(&self) -> usize {
        self.coeff.n()
    }

    pub fn coeff(&self) -> &Matrix {
        &self.coeff
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coeff.get(i, j)
    }

    /// `xᵀ·coeff·x`, summed from scratch.
    pub fn objective(&self, x: &[bool]) -> f64 {
        debug_assert_eq!(x.len(), self.m());
        let mut total = 0.0;
        for i in (0..self.m()).filter(|&i| x[i]) {
            let row = self.coeff.row(i);
            for j in (0..self.m()).filter(|&j| x[j]) {
                total += row[j];
            }
        }
        total
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff.max_abs()
    }

    /// A quadratic pseudo-boolean function is submodular iff every
    /// off-diagonal coefficient is non-positive.
    pub fn is_submodular(&self) -> bool {
        let m = self.m();
        (0..m).all(|i| (0..m).all(|j| i == j || self.get(i, j) <= 0.0))
    }

    pub fn to_ising(&self) -> IsingModel {
        let m = self.m();
        let mut couplings = Matrix::zeros(m);
        let mut biases = vec![0.0; m];
        let mut offset = 0.0;
        for i in 0..m {
            let d = self.get(i, i);
            biases[i] += 0.5 * d;
            offset += 0.5 * d;
            for j in (0..m).filter(|&j| j != i) {
                let q = self.get(i, j);
                couplings.set(i, j, 0.25 * q);
                biases[i] += 0.5 * q;
                offset += 0.25 * q;
            }
        }
        IsingModel {
            couplings,
            biases,
            offset,
        }
    }
}

/// `sᵀJs + bᵀs + offset` over `s ∈ {-1, 1}^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    pub couplings: Matrix,
    pub biases: Vec<f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn objective(&self, spins: &[i8]) -> f64 {
        let m = self.biases.len();
        let mut total = self.offset;
        for i in 0..m {
            let si = f64::from(spins[i]);
            total += self.biases[i] * si;
            for j in 0..m {
                total += self.couplings.get(i, j) * si * f64::from(spins[j]);
            }
        }
        total
    }
}

pub fn spins_from_bits(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(with = "bits")]
    pub bits: Vec<bool>,
    pub energy: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub m: usize,
    pub samples: Vec<Sample>,
    pub best: usize,
}

impl SampleSet {
    /// Merges raw reads, recomputes energies from `qubo`, and sorts.
    pub fn from_reads(qubo: &Qubo, reads: impl IntoIterator<Item = Vec<bool>>) -> Self {
        let mut counts: HashMap<Vec<bool>, usize> = HashMap::new();
        for bits in reads {
            *counts.entry(bits).or_default() += 1;
        }
        let samples = counts
            .into_iter()
            .map(|(bits, multiplicity)| Sample {
                energy: qubo.objective(&bits),
                bits,
                multiplicity,
            })
            .collect();
        Self::sorted(qubo.m(), samples)
    }

    fn sorted(m: usize, mut samples: Vec<Sample>) -> Self {
        samples.sort_by(sample_order);
        SampleSet { m, samples, best: 0 }
    }

    pub fn best(&self) -> &Sample {
        &self.samples[self.best]
    }

    pub fn num_reads(&self) -> usize {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric data serializes")
    }
}

fn sample_order(a: &Sample, b: &Sample) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then_with(|| a.bits.cmp(&b.bits))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Exhaustive,
    SimulatedAnnealing(AnnealParams),
    TabuSearch(TabuParams),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::SimulatedAnnealing(AnnealParams::default())
    }
}

impl BackendConfig {
    pub fn annealing(reads: usize) -> Self {
        BackendConfig::SimulatedAnnealing(AnnealParams {
            reads,
            ..AnnealParams::default()
        })
    }

    pub fn tabu(reads: usize) -> Self {
        BackendConfig::TabuSearch(TabuParams {
            reads,
            ..TabuParams::default()
        })
    }

    pub fn reads(&self) -> Option<usize> {
        match self {
            BackendConfig::Exhaustive => None,
            BackendConfig::SimulatedAnnealing(p) => Some(p.reads),
            BackendConfig::TabuSearch(p) => Some(p.reads),
        }
    }

    /// Same backend with a different read count; exhaustive is unchanged.
    pub fn with_reads(&self, reads: usize) -> Self {
        match self {
            BackendConfig::Exhaustive => BackendConfig::Exhaustive,
            BackendConfig::SimulatedAnnealing(p) => {
                BackendConfig::SimulatedAnnealing(AnnealParams { reads, ..p.clone() })
            }
            BackendConfig::TabuSearch(p) => {
                BackendConfig::TabuSearch(TabuParams { reads, ..p.clone() })
            }
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            BackendConfig::Exhaustive if m > EXHAUSTIVE_LIMIT => Err(Error::capability(format!(
                "exhaustive backend handles at most {EXHAUSTIVE_LIMIT} variables, got {m}"
            ))),
            _ if self.reads() == Some(0) => Err(Error::validation("reads must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Samples `qubo` with `backend`. Stochastic backends seed read `r` with
/// `seed + r`, so results do not depend on thread scheduling.
pub fn solve(qubo: &Qubo, backend: &BackendConfig, seed: u64) -> Result<SampleSet> {
    backend.validate(qubo.m())?;
    let set = match backend {
        BackendConfig::Exhaustive => {
            SampleSet::sorted(qubo.m(), exhaustive::enumerate(qubo, exhaustive::KEEP))
        }
        BackendConfig::SimulatedAnnealing(params) => {
            let schedule = params.schedule(qubo);
            let reads: Vec<Vec<bool>> = (0..params.reads as u64)
                .into_par_iter()
                .map(|r| anneal::read(qubo, &schedule, seed.wrapping_add(r)))
                .collect();
            SampleSet::from_reads(qubo, reads)
        }
        BackendConfig::TabuSearch(params) => {
            let reads: Vec<Vec<bool>> = (0..params.reads as u64)
                .into_par_iter()
                .map(|r| tabu::read(qubo, params, seed.wrapping_add(r)))
                .collect();
            SampleSet::from_reads(qubo, reads)
        }
    };
    Ok(set)
}

/// Bit vectors as arrays of 0/1.
pub(crate) mod bits {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        bits.iter().map(|&b| u8::from(b)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("bit must be 0 or 1, got {other}"))),
            })
            .collect()
    }
}

/// Flip gain bookkeeping shared by the local-search backends.
pub(crate) struct LocalFields<'a> {
    qubo: &'a Qubo,
    pub x: Vec<bool>,
    /// `field[i] = Σ_{j≠i} coeff[i,j]·x[j]`.
    field: Vec<f64>,
}

impl<'a> LocalFields<'a> {
    pub fn new(qubo: &'a Qubo, x: Vec<bool>) -> Self {
        let m = qubo.m();
        let field = (0..m)
            .map(|i| {
                (0..m)
                    .filter(|&j| j != i && x[j])
                    .map(|j| qubo.get(i, j))
                    .sum()
            })
            .collect();
        LocalFields { qubo, x, field }
    }

    /// Objective change if bit `i` flips.
    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        let gain = self.qubo.get(i, i) + 2.0 * self.field[i];
        if self.x[i] {
            -gain
        } else {
            gain
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let sign = if self.x[i] { -1.0 } else { 1.0 };
        self.x[i] = !self.x[i];
        let row = self.qubo.coeff().row(i);
        for (j, f) in self.field.iter_mut().enumerate() {
            if j != i {
                *f += sign * row[j];
            }
        }
    }
}
