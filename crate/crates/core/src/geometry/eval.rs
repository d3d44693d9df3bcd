use super::geodesic::GeodesicMatrix;
use crate::error::{check_size, Error, Result};
use crate::perm::Permutation;

/// Cumulative correspondence error: `(t, fraction of vertices whose
/// geodesic error, normalized by the target diameter, is at most t)`.
pub fn error_curve(
    pred: &Permutation,
    gt: &Permutation,
    tgt_geo: &GeodesicMatrix,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_size(gt.len(), pred.len())?;
    check_size(tgt_geo.n(), pred.len())?;
    let diameter = tgt_geo.diameter();
    if diameter <= 0.0 {
        return Err(Error::validation("target shape has zero geodesic diameter"));
    }
    let errors: Vec<f64> = (0..pred.len())
        .map(|v| tgt_geo.get(pred.apply(v), gt.apply(v)) / diameter)
        .collect();
    let n = errors.len().max(1) as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (t, errors.iter().filter(|&&e| e <= t).count() as f64 / n))
        .collect())
}

/// `steps + 1` evenly spaced thresholds on `[0, max]`.
pub fn uniform_thresholds(max: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| max * i as f64 / steps as f64).collect()
}

pub fn curve_to_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("threshold,fraction\n");
    for (t, f) in curve {
        out.push_str(&format!("{t},{f}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Matrix;

    fn line(n: usize) -> GeodesicMatrix {
        GeodesicMatrix::new(Matrix::from_fn(n, |i, j| (i as f64 - j as f64).abs())).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let gt = Permutation::new(vec![2, 0, 1, 3]).unwrap();
        let curve = error_curve(&gt, &gt, &line(4), &[0.0, 0.5]).unwrap();
        assert_eq!(curve, vec![(0.0, 1.0), (0.5, 1.0)]);
    }

    #[test]
    fn neighbor_shift() {
        // Every vertex lands on a neighbor of its true image on a 5-cycle
        // with diameter 2: normalized error 1/2 for everyone.
        let gt = Permutation::identity(5);
        let pred = Permutation::new(vec![1, 2, 3, 4, 0]).unwrap();
        let g = GeodesicMatrix::new(Matrix::from_fn(5, |i, j| {
            let d = (i as f64 - j as f64).abs();
            d.min(5.0 - d)
        }))
        .unwrap();
        let curve = error_curve(&pred, &gt, &g, &[0.0, 0.49, 0.5, 1.0]).unwrap();
        assert_eq!(curve, vec![(0.0, 0.0), (0.49, 0.0), (0.5, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn monotone_and_checked() {
        let pred = Permutation::new(vec![3, 1, 0, 2, 5, 4]).unwrap();
        let gt = Permutation::identity(6);
        let curve = error_curve(&pred, &gt, &line(6), &uniform_thresholds(1.0, 20)).unwrap();
        assert!(curve.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(curve.last().unwrap().1, 1.0);
        assert!(curve_to_csv(&curve).starts_with("threshold,fraction\n0,"));
        let zero = GeodesicMatrix::new(Matrix::zeros(6)).unwrap();
        assert!(error_curve(&pred, &gt, &zero, &[0.0]).is_err());
        assert!(error_curve(&pred, &Permutation::identity(5), &line(6), &[0.0]).is_err());
    }
}
