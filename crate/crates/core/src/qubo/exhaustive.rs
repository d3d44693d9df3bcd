//! Brute-force enumeration in Gray-code order.

use super::{sample_order, LocalFields, Qubo, Sample};

/// Number of lowest-energy assignments reported.
pub(crate) const KEEP: usize = 16;

pub(crate) fn enumerate(qubo: &Qubo, keep: usize) -> Vec<Sample> {
    let m = qubo.m();
    let mut state = LocalFields::new(qubo, vec![false; m]);
    let mut energy = 0.0;
    let mut best: Vec<Sample> = Vec::with_capacity(keep + 1);
    offer(&mut best, keep, &state.x, energy);

    for step in 1u64..(1u64 << m) {
        let bit = step.trailing_zeros() as usize;
        energy += state.delta(bit);
        state.flip(bit);
        offer(&mut best, keep, &state.x, energy);
    }

    // Incremental sums drift slightly on real-valued data.
    for s in &mut best {
        s.energy = qubo.objective(&s.bits);
    }
    best.sort_by(sample_order);
    best
}

fn offer(best: &mut Vec<Sample>, keep: usize, bits: &[bool], energy: f64) {
    if best.len() == keep {
        let worst = &best[keep - 1];
        let worse = energy
            .total_cmp(&worst.energy)
            .then_with(|| bits.cmp(&worst.bits[..]))
            .is_ge();
        if worse {
            return;
        }
    }
    let candidate = Sample {
        bits: bits.to_vec(),
        energy,
        multiplicity: 1,
    };
    let pos = best
        .binary_search_by(|s| sample_order(s, &candidate))
        .unwrap_or_else(|p| p);
    best.insert(pos, candidate);
    best.truncate(keep);
}
