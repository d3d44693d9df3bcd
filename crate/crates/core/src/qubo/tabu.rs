//! One-flip tabu search with aspiration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LocalFields, Qubo, DEFAULT_READS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabuParams {
    pub reads: usize,
    /// Iterations a flipped bit stays tabu; `m/4 + 1` when unset.
    #[serde(default)]
    pub tenure: Option<usize>,
    /// Moves per read; `20·m` when unset.
    #[serde(default)]
    pub iterations: Option<usize>,
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams {
            reads: DEFAULT_READS,
            tenure: None,
            iterations: None,
        }
    }
}

pub(crate) fn read(qubo: &Qubo, params: &TabuParams, seed: u64) -> Vec<bool> {
    let m = qubo.m();
    if m == 0 {
        return Vec::new();
    }
    let tenure = params.tenure.unwrap_or(m / 4 + 1);
    let iterations = params.iterations.unwrap_or(20 * m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
    let mut energy = qubo.objective(&start);
    let mut state = LocalFields::new(qubo, start);
    let mut best = state.x.clone();
    let mut best_energy = energy;
    // Iteration until which each bit is tabu.
    let mut tabu_until = vec![0usize; m];

    for it in 1..=iterations {
        let mut chosen: Option<(usize, f64)> = None;
        for i in 0..m {
            let d = state.delta(i);
            let allowed = tabu_until[i] < it || energy + d < best_energy;
            if allowed && chosen.is_none_or(|(_, cd)| d < cd) {
                chosen = Some((i, d));
            }
        }
        let Some((i, d)) = chosen else { break };
        state.flip(i);
        energy += d;
        tabu_until[i] = it + tenure;
        if energy < best_energy {
            best_energy = energy;
            best.clone_from(&state.x);
        }
    }
    best
}
