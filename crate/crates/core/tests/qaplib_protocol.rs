//! The benchmark protocol on the QAPLIB instances bundled under tests/data.

use std::path::Path;

use qmatch_core::qaplib::{load_dat, run_benchmark, BenchmarkConfig};
use qmatch_core::Permutation;

#[test]
fn bur26a_within_one_percent() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/bur26a.dat");
    let inst = load_dat(path).unwrap();
    let report = run_benchmark(&[inst], &BenchmarkConfig { seed: 26, ..BenchmarkConfig::default() }).unwrap();
    let rec = &report.records[0];
    assert_eq!(rec.reference_optimum, Some(5426670.0));
    assert!(rec.relative_gap.unwrap() >= 0.0);
    assert!(rec.relative_gap.unwrap() <= 0.01, "gap {:?}", rec.relative_gap);
}

#[test]
fn chr12c_report_is_consistent() {
    // Sparse chr flows are hard for swap moves; only consistency is checked.
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/chr12c.dat");
    let inst = load_dat(path).unwrap();
    let report = run_benchmark(std::slice::from_ref(&inst), &BenchmarkConfig { seed: 12, ..BenchmarkConfig::default() }).unwrap();
    let rec = &report.records[0];
    let best = Permutation::new(rec.best_perm.clone()).unwrap();
    assert_eq!(inst.objective(&best).unwrap() as f64, rec.best_energy);
    assert!(rec.best_energy >= 11156.0);
}
