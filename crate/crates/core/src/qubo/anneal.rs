//! Single-flip Metropolis annealing with a geometric temperature schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LocalFields, Qubo, DEFAULT_READS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub reads: usize,
    /// Sweeps per read; `10·m` when unset.
    #[serde(default)]
    pub sweeps: Option<usize>,
    /// Starting temperature; `max|coeff|` when unset.
    #[serde(default)]
    pub t_initial: Option<f64>,
    /// Final temperature; `1e-3·max|coeff|` when unset.
    #[serde(default)]
    pub t_final: Option<f64>,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            reads: DEFAULT_READS,
            sweeps: None,
            t_initial: None,
            t_final: None,
        }
    }
}

impl AnnealParams {
    pub(crate) fn schedule(&self, qubo: &Qubo) -> Vec<f64> {
        let scale = qubo.max_abs();
        let sweeps = self.sweeps.unwrap_or(10 * qubo.m()).max(1);
        let t0 = self.t_initial.unwrap_or(scale);
        let t1 = self.t_final.unwrap_or(1e-3 * scale);
        if !(t0 > 0.0 && t1 > 0.0) {
            return vec![0.0; sweeps];
        }
        if sweeps == 1 {
            return vec![t1];
        }
        let ratio = (t1 / t0).powf(1.0 / (sweeps - 1) as f64);
        (0..sweeps).map(|s| t0 * ratio.powi(s as i32)).collect()
    }
}

/// One independent read. Returns the lowest-energy state visited, after a
/// final greedy descent.
pub(crate) fn read(qubo: &Qubo, temperatures: &[f64], seed: u64) -> Vec<bool> {
    let m = qubo.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<bool> = (0..m).map(|_| rng.gen()).collect();
    let mut energy = qubo.objective(&start);
    let mut state = LocalFields::new(qubo, start);
    let mut best = state.x.clone();
    let mut best_energy = energy;

    for &t in temperatures {
        for i in 0..m {
            let d = state.delta(i);
            let accept = d <= 0.0 || (t > 0.0 && rng.gen::<f64>() < (-d / t).exp());
            if accept {
                state.flip(i);
                energy += d;
                if energy < best_energy {
                    best_energy = energy;
                    best.clone_from(&state.x);
                }
            }
        }
    }

    let mut state = LocalFields::new(qubo, best);
    loop {
        let mut improved = false;
        for i in 0..m {
            if state.delta(i) < 0.0 {
                state.flip(i);
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    state.x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Matrix;

    #[test]
    fn schedule_defaults() {
        let q = Qubo::from_rows(vec![vec![-2.0, 1.0], vec![1.0, 4.0]]).unwrap();
        let s = AnnealParams::default().schedule(&q);
        assert_eq!(s.len(), 20);
        assert!((s[0] - 4.0).abs() < 1e-12);
        assert!((s[19] - 4e-3).abs() < 1e-12);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_problem_schedule_is_greedy() {
        let q = Qubo::new(Matrix::zeros(3)).unwrap();
        let s = AnnealParams::default().schedule(&q);
        assert!(s.iter().all(|&t| t == 0.0));
        assert_eq!(read(&q, &s, 1).len(), 3);
    }
}
