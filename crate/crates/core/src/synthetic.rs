//! Planted instances for tests and benchmarks.

use rand::Rng;

use crate::instance::{Matrix, QapInstance};
use crate::perm::Permutation;

/// Symmetric zero-diagonal matrix with off-diagonal entries uniform in `[1, 10)`.
pub fn uniform_distances<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let mut d = Matrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.gen_range(1.0..10.0);
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    d
}

/// Euclidean distances between `n` uniform points in the unit cube.
pub fn point_distances<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let pts: Vec<[f64; 3]> = (0..n).map(|_| rng.gen()).collect();
    Matrix::from_fn(n, |i, j| {
        let (a, b) = (pts[i], pts[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    })
}

/// Isometric instance whose target is the source relabeled by `planted`, so
/// `energy(planted) == 0`.
pub fn planted(src: Matrix, planted: &Permutation) -> QapInstance {
    let tgt = src.relabel(&planted.inverse());
    QapInstance::isometric(src, tgt).expect("relabeled distances stay valid")
}

pub fn planted_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (QapInstance, Permutation) {
    let d = uniform_distances(n, rng);
    let p = Permutation::random(n, rng);
    (planted(d, &p), p)
}

pub fn planted_points<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (QapInstance, Permutation) {
    let d = point_distances(n, rng);
    let p = Permutation::random(n, rng);
    (planted(d, &p), p)
}
