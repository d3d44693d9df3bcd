//! QAPLIB instances and the benchmark harness.
//!
//! A `.dat` file holds `n` followed by the flow matrix `A` and the distance
//! matrix `B`; the objective of a permutation `p` is
//! `Σ_{i,j} A[i,j]·B[p(i),p(j)]`.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{solve_random_cycles, RandomCycleConfig, DEFAULT_PASSES};
use crate::instance::{Matrix, QapInstance};
use crate::perm::Permutation;
use crate::qubo::{BackendConfig, DEFAULT_READS};

/// Reads used for instances larger than [`LARGE_N`].
pub const LARGE_READS: usize = 5000;
pub const LARGE_N: usize = 25;
pub const DEFAULT_REPEATS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QaplibInstance {
    pub name: String,
    n: usize,
    a: Vec<i64>,
    b: Vec<i64>,
}

impl QaplibInstance {
    pub fn new(name: impl Into<String>, n: usize, a: Vec<i64>, b: Vec<i64>) -> Result<Self> {
        if a.len() != n * n || b.len() != n * n {
            return Err(Error::validation(format!(
                "expected two {n}×{n} matrices, got {} and {} entries",
                a.len(),
                b.len()
            )));
        }
        Ok(QaplibInstance {
            name: name.into(),
            n,
            a,
            b,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.n + j]
    }

    pub fn b(&self, i: usize, j: usize) -> i64 {
        self.b[i * self.n + j]
    }

    /// Exact integer objective.
    pub fn objective(&self, p: &Permutation) -> Result<i64> {
        crate::error::check_size(self.n, p.len())?;
        let n = self.n;
        Ok((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.a(i, j) * self.b(p.apply(i), p.apply(j)))
            .sum())
    }

    pub fn to_instance(&self) -> QapInstance {
        let n = self.n;
        let a = Matrix::from_fn(n, |i, j| self.a(i, j) as f64);
        let b = Matrix::from_fn(n, |i, j| self.b(i, j) as f64);
        QapInstance::factored(a, b).expect("both matrices are n×n")
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for m in [&self.a, &self.b] {
            out.push('\n');
            for row in m.chunks(self.n.max(1)) {
                let cells: Vec<String> = row.iter().map(i64::to_string).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn reference(&self) -> Option<&'static Reference> {
        reference(&self.name)
    }
}

fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
}

fn int_token(line: usize, t: &str) -> Result<i64> {
    t.parse()
        .map_err(|_| Error::parse(line, format!("expected an integer, found {t:?}")))
}

/// Parses the standard layout; line breaks are insignificant.
pub fn parse_dat(text: &str) -> Result<QaplibInstance> {
    let toks: Vec<(usize, &str)> = tokens(text).collect();
    let &(line, first) = toks.first().ok_or_else(|| Error::parse(1, "empty file"))?;
    let n = usize::try_from(int_token(line, first)?)
        .map_err(|_| Error::parse(line, "size must be nonnegative"))?;
    let expected = 1 + 2 * n * n;
    if toks.len() != expected {
        let at = toks.last().map_or(1, |t| t.0);
        return Err(Error::parse(
            at,
            format!("expected {expected} tokens for n = {n}, found {}", toks.len()),
        ));
    }
    let values = toks[1..]
        .iter()
        .map(|&(l, t)| int_token(l, t))
        .collect::<Result<Vec<i64>>>()?;
    let (a, b) = values.split_at(n * n);
    QaplibInstance::new("", n, a.to_vec(), b.to_vec())
}

/// Reads a `.dat` file; the instance is named after the file stem.
pub fn load_dat(path: impl AsRef<Path>) -> Result<QaplibInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut inst = parse_dat(&text)?;
    inst.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(inst)
}

/// Published solution: `n value` then a 1-based permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QaplibSolution {
    pub n: usize,
    pub value: i64,
    pub perm: Permutation,
}

impl QaplibSolution {
    /// The listed permutation, or its inverse if that is the one attaining
    /// `value` (solution files are not consistent about direction).
    pub fn permutation_for(&self, inst: &QaplibInstance) -> Result<Permutation> {
        if inst.objective(&self.perm)? == self.value {
            return Ok(self.perm.clone());
        }
        let inv = self.perm.inverse();
        if inst.objective(&inv)? == self.value {
            return Ok(inv);
        }
        Err(Error::validation(format!(
            "solution does not attain its stated value {} on {}",
            self.value, inst.name
        )))
    }
}

pub fn parse_sln(text: &str) -> Result<QaplibSolution> {
    let toks: Vec<(usize, &str)> = tokens(text).collect();
    if toks.len() < 2 {
        return Err(Error::parse(1, "expected size and objective value"));
    }
    let n = usize::try_from(int_token(toks[0].0, toks[0].1)?)
        .map_err(|_| Error::parse(toks[0].0, "size must be nonnegative"))?;
    let value = int_token(toks[1].0, toks[1].1)?;
    if toks.len() != 2 + n {
        return Err(Error::parse(
            toks.last().unwrap().0,
            format!("expected {} tokens for n = {n}, found {}", 2 + n, toks.len()),
        ));
    }
    let map = toks[2..]
        .iter()
        .map(|&(l, t)| {
            let v = int_token(l, t)?;
            if v < 1 || v as usize > n {
                return Err(Error::parse(l, format!("entry {v} is outside 1..={n}")));
            }
            Ok(v as usize - 1)
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(QaplibSolution {
        n,
        value,
        perm: Permutation::new(map)?,
    })
}

/// Known optimum and the value the original α-expansion study reported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub name: &'static str,
    pub optimum: f64,
    pub published: f64,
}

const fn r(name: &'static str, optimum: f64, published: f64) -> Reference {
    Reference {
        name,
        optimum,
        published,
    }
}

pub static REFERENCES: &[Reference] = &[
    r("bur26a", 5426670.0, 5450757.0),
    r("bur26b", 3817852.0, 3828405.0),
    r("bur26c", 5426795.0, 5485230.0),
    r("bur26d", 3821225.0, 3822190.0),
    r("bur26e", 5386879.0, 5403238.0),
    r("bur26f", 3782044.0, 3797120.0),
    r("bur26g", 10117172.0, 10158673.0),
    r("bur26h", 7098658.0, 7152966.0),
    r("esc16a", 68.0, 70.0),
    r("esc16b", 292.0, 292.0),
    r("esc16c", 160.0, 160.0),
    r("esc16d", 16.0, 16.0),
    r("esc16e", 28.0, 28.0),
    r("esc16f", 0.0, 0.0),
    r("esc16g", 26.0, 26.0),
    r("esc16h", 996.0, 996.0),
    r("esc16i", 14.0, 14.0),
    r("esc16j", 8.0, 8.0),
    r("had12", 1652.0, 1652.0),
    r("had14", 2724.0, 2748.0),
    r("had16", 3720.0, 3750.0),
    r("had18", 5358.0, 5358.0),
    r("had20", 6922.0, 6922.0),
    r("nug12", 578.0, 618.0),
    r("nug14", 1014.0, 1026.0),
    r("nug16a", 1610.0, 1650.0),
    r("nug16b", 1240.0, 1296.0),
    r("nug17", 1732.0, 1882.0),
    r("nug18", 1930.0, 1936.0),
    r("nug20", 2570.0, 2606.0),
    r("nug21", 2438.0, 2574.0),
    r("nug22", 3596.0, 3712.0),
    r("nug24", 3488.0, 3632.0),
    r("nug25", 3744.0, 4004.0),
    r("nug27", 5234.0, 5550.0),
    r("nug28", 5166.0, 5348.0),
    r("nug30", 6124.0, 6352.0),
    r("scr12", 31410.0, 35454.0),
    r("scr15", 51140.0, 58320.0),
    r("scr20", 110030.0, 114322.0),
    r("rou12", 235528.0, 251872.0),
    r("rou15", 354210.0, 373218.0),
    r("rou20", 725522.0, 754506.0),
];

pub fn reference(name: &str) -> Option<&'static Reference> {
    REFERENCES.iter().find(|r| r.name.eq_ignore_ascii_case(name))
}

/// `(E - E_opt) / E_opt`, or the absolute difference when `E_opt = 0`.
pub fn relative_gap(energy: f64, optimum: f64) -> f64 {
    if optimum == 0.0 {
        energy - optimum
    } else {
        (energy - optimum) / optimum
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub repeats: usize,
    pub passes: usize,
    /// Reads per QUBO; by default 500, or 5000 above n = 25.
    pub reads: Option<usize>,
    /// Backend kind; its read count is replaced per instance.
    pub backend: BackendConfig,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            repeats: DEFAULT_REPEATS,
            passes: DEFAULT_PASSES,
            reads: None,
            backend: BackendConfig::default(),
            seed: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn reads_for(&self, n: usize) -> usize {
        self.reads
            .unwrap_or(if n > LARGE_N { LARGE_READS } else { DEFAULT_READS })
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::validation("repeats must be positive"));
        }
        if self.passes == 0 {
            return Err(Error::validation("passes must be positive"));
        }
        if self.reads == Some(0) {
            return Err(Error::validation("reads must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub name: String,
    pub n: usize,
    pub best_energy: f64,
    pub reference_optimum: Option<f64>,
    pub relative_gap: Option<f64>,
    pub repeats: usize,
    pub seconds: f64,
    /// Best permutation found, 0-based.
    pub best_perm: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: Vec<BenchmarkRecord>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "n",
            "best_energy",
            "reference_optimum",
            "relative_gap",
            "repeats",
            "seconds",
        ])
        .expect("writing to memory");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.name.clone(),
                r.n.to_string(),
                r.best_energy.to_string(),
                opt(r.reference_optimum),
                opt(r.relative_gap),
                r.repeats.to_string(),
                r.seconds.to_string(),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
    }
}

/// Cyclic α-expansion over whole-index 2-cycle sets, best of `repeats`
/// random starts per instance.
pub fn run_benchmark(
    instances: &[QaplibInstance],
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    config.validate()?;
    let records = instances
        .iter()
        .map(|inst| run_instance(inst, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport { records })
}

fn run_instance(inst: &QaplibInstance, config: &BenchmarkConfig) -> Result<BenchmarkRecord> {
    let start = Instant::now();
    let cost = inst.to_instance();
    let backend = config.backend.with_reads(config.reads_for(inst.n()));
    backend.validate(0)?;
    let runs = (0..config.repeats)
        .into_par_iter()
        .map(|rep| {
            let seed = config.seed.wrapping_add(rep as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p_init = Permutation::random(inst.n(), &mut rng);
            let trace = solve_random_cycles(
                &cost,
                &p_init,
                &RandomCycleConfig {
                    passes: config.passes,
                    backend: backend.clone(),
                    seed,
                },
            )?;
            let e = inst.objective(&trace.final_perm)? as f64;
            Ok((e, trace.final_perm))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best_energy, best_perm) = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one repeat");
    let reference_optimum = inst.reference().map(|r| r.optimum);
    Ok(BenchmarkRecord {
        name: inst.name.clone(),
        n: inst.n(),
        best_energy,
        reference_optimum,
        relative_gap: reference_optimum.map(|o| relative_gap(best_energy, o)),
        repeats: config.repeats,
        seconds: start.elapsed().as_secs_f64(),
        best_perm: best_perm.into_vec(),
    })
}
