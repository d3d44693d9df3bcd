//! `qmatch`: QAPLIB benchmarks, shape matching and raw QUBO solving from the
//! command line.
//!
//! Exit codes: 0 success, 1 solver or output failure, 2 invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmatch_core::geometry::{
    curve_to_csv, error_curve, farthest_point_sample_mesh, geodesics, geodesics_between,
    histogram_similarity, lap_init, load_mesh, uniform_thresholds, GeodesicMatrix,
    SimilarityMatrix,
};
use qmatch_core::qaplib::{load_dat, run_benchmark, BenchmarkConfig};
use qmatch_core::qmatch::InitMode;
use qmatch_core::{
    qmatch_run, solve, BackendConfig, Permutation, QMatchConfig, QapInstance, Qubo,
};

const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "qmatch", version, about = "Cyclic α-expansion for quadratic assignment problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark QAPLIB .dat instances (best of several random starts).
    Qaplib(QaplibArgs),
    /// Match two OFF meshes by worst-vertex α-expansion.
    Shapes(ShapesArgs),
    /// Solve a QUBO given as JSON {"m": .., "coeff": [[..]]}.
    Qubo(QuboArgs),
    /// Cumulative geodesic error of a predicted permutation.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    /// Simulated annealing.
    Sa,
    Tabu,
    /// Brute force, up to 25 variables.
    Exhaustive,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "sa")]
    backend: BackendKind,
    /// Reads per QUBO for the sampling backends [default: 500]
    #[arg(long)]
    reads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl SolverArgs {
    fn backend(&self, default_reads: usize) -> Result<BackendConfig> {
        let reads = self.reads.unwrap_or(default_reads);
        let backend = match self.backend {
            BackendKind::Sa => BackendConfig::annealing(reads),
            BackendKind::Tabu => BackendConfig::tabu(reads),
            BackendKind::Exhaustive => BackendConfig::Exhaustive,
        };
        if self.reads == Some(0) {
            return Err(qmatch_core::Error::Validation("--reads must be at least 1".into()).into());
        }
        Ok(backend)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct QaplibArgs {
    /// QAPLIB .dat files; each instance is named after its file stem.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Passes over all 2-cycles per repeat.
    #[arg(long, default_value_t = 3)]
    passes: usize,
    /// Random restarts per instance; the best is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Report file [default: stdout]. Without --reads, instances with n > 25
    /// use 5000 reads per QUBO and smaller ones 500.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Report 0 seconds so reports are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct ShapesArgs {
    source: PathBuf,
    target: PathBuf,
    /// identity | random | lap (built-in histogram similarity) | lap:<file>
    #[arg(long, default_value = "lap")]
    init: String,
    /// Farthest-point samples taken on the source; the same vertex indices
    /// are used on the target.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 40)]
    k_worst: usize,
    #[arg(long, default_value_t = 30)]
    max_outer_iters: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Directory for perm.json, trace.jsonl and curve.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Ground-truth permutation JSON; writes curve.csv.
    #[arg(long)]
    eval: Option<PathBuf>,
}

#[derive(Args)]
struct QuboArgs {
    file: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// SampleSet file [default: stdout]
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted permutation JSON.
    pred: PathBuf,
    /// Ground-truth permutation JSON.
    gt: PathBuf,
    /// Target mesh (OFF) supplying the geodesic distances.
    target: PathBuf,
    /// Largest threshold, as a fraction of the geodesic diameter.
    #[arg(long, default_value_t = 0.25)]
    max_threshold: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Curve CSV [default: stdout]
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Input problems exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<qmatch_core::Error>() || e.is::<serde_json::Error>()) {
        2
    } else {
        1
    }
}

fn input<T>(r: qmatch_core::Result<T>, path: &Path) -> Result<T> {
    r.with_context(|| format!("{}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|source| qmatch_core::Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    serde_json::from_str(&text).with_context(|| format!("{}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_qaplib(args: &QaplibArgs) -> Result<()> {
    let backend = args.solver.backend(500)?;
    let instances = args
        .files
        .iter()
        .map(|f| input(load_dat(f), f))
        .collect::<Result<Vec<_>>>()?;
    let config = BenchmarkConfig {
        repeats: args.repeats,
        passes: args.passes,
        reads: args.solver.reads,
        backend,
        seed: args.solver.seed,
    };
    let mut report = run_benchmark(&instances, &config)?;
    if args.no_timing {
        for r in &mut report.records {
            r.seconds = 0.0;
        }
    }
    let text = match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    };
    emit(args.out.as_deref(), &text)
}

fn cmd_shapes(args: &ShapesArgs) -> Result<()> {
    let backend = args.solver.backend(500)?;
    let src = input(load_mesh(&args.source), &args.source)?;
    let tgt = input(load_mesh(&args.target), &args.target)?;
    let (d_src, d_tgt) = match args.samples {
        Some(count) => {
            if count > src.n() || count > tgt.n() {
                return Err(qmatch_core::Error::Validation(format!(
                    "--samples {count} exceeds the vertex counts ({} and {})",
                    src.n(),
                    tgt.n()
                ))
                .into());
            }
            let idx = input(farthest_point_sample_mesh(&src, count, args.solver.seed), &args.source)?;
            (
                input(geodesics_between(&src, &idx), &args.source)?,
                input(geodesics_between(&tgt, &idx), &args.target)?,
            )
        }
        None => {
            if src.n() != tgt.n() {
                return Err(qmatch_core::Error::Validation(format!(
                    "meshes have {} and {} vertices; use --samples to match subsets",
                    src.n(),
                    tgt.n()
                ))
                .into());
            }
            (
                input(geodesics(&src), &args.source)?,
                input(geodesics(&tgt), &args.target)?,
            )
        }
    };
    let n = d_src.n();
    let (init_mode, p_init) = initial_permutation(&args.init, &d_src, &d_tgt, args.solver.seed)?;
    let gt: Option<Permutation> = args.eval.as_deref().map(read_json).transpose()?;
    if let Some(gt) = &gt {
        if gt.len() != n {
            return Err(qmatch_core::Error::Dimension {
                expected: n,
                found: gt.len(),
            })
            .context("ground truth size");
        }
    }

    let inst = QapInstance::isometric(d_src.into_matrix(), d_tgt.clone().into_matrix())?;
    let config = QMatchConfig {
        k_worst: args.k_worst,
        backend,
        max_outer_iters: args.max_outer_iters,
        seed: args.solver.seed,
        init: init_mode,
    };
    let trace = qmatch_run(&inst, &p_init, &config)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let perm_json = serde_json::to_string(&trace.final_perm)? + "\n";
    emit(Some(&args.out_dir.join("perm.json")), &perm_json)?;
    emit(Some(&args.out_dir.join("trace.jsonl")), &trace.to_jsonl())?;
    if let Some(gt) = &gt {
        let curve = error_curve(&trace.final_perm, gt, &d_tgt, &uniform_thresholds(0.25, 50))?;
        emit(Some(&args.out_dir.join("curve.csv")), &curve_to_csv(&curve))?;
    }
    println!(
        "{}",
        serde_json::json!({ "n": n, "final_energy": trace.final_energy, "steps": trace.steps.len() })
    );
    Ok(())
}

fn initial_permutation(
    spec: &str,
    d_src: &GeodesicMatrix,
    d_tgt: &GeodesicMatrix,
    seed: u64,
) -> Result<(InitMode, Permutation)> {
    let n = d_src.n();
    Ok(match spec {
        "identity" => (InitMode::Identity, Permutation::identity(n)),
        "random" => (
            InitMode::Random,
            Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed)),
        ),
        "lap" => (InitMode::Similarity, lap_init(&histogram_similarity(d_src, d_tgt)?)?),
        other => match other.strip_prefix("lap:") {
            Some(file) => {
                let path = Path::new(file);
                let sim = input(SimilarityMatrix::load(path), path)?;
                if sim.shape() != (n, n) {
                    return Err(qmatch_core::Error::Validation(format!(
                        "similarity matrix is {}×{}, expected {n}×{n}",
                        sim.shape().0,
                        sim.shape().1
                    )))
                    .with_context(|| path.display().to_string());
                }
                (InitMode::Similarity, lap_init(&sim)?)
            }
            None => {
                return Err(qmatch_core::Error::Validation(format!(
                    "unknown --init {other:?}; expected identity, random, lap or lap:<file>"
                ))
                .into())
            }
        },
    })
}

fn cmd_qubo(args: &QuboArgs) -> Result<()> {
    let backend = args.solver.backend(500)?;
    let text = fs::read_to_string(&args.file).map_err(|source| qmatch_core::Error::Io {
        path: args.file.clone(),
        source,
    })?;
    let qubo = input(Qubo::from_json(&text), &args.file)?;
    let samples = solve(&qubo, &backend, args.solver.seed)?;
    emit(args.out.as_deref(), &(samples.to_json() + "\n"))
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let pred: Permutation = read_json(&args.pred)?;
    let gt: Permutation = read_json(&args.gt)?;
    let mesh = input(load_mesh(&args.target), &args.target)?;
    let geo = input(geodesics(&mesh), &args.target)?;
    if !(args.max_threshold >= 0.0) {
        bail!(qmatch_core::Error::Validation("--max-threshold must be nonnegative".into()));
    }
    let curve = error_curve(&pred, &gt, &geo, &uniform_thresholds(args.max_threshold, args.steps))?;
    emit(args.out.as_deref(), &curve_to_csv(&curve))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Qaplib(a) => cmd_qaplib(a),
        Command::Shapes(a) => cmd_shapes(a),
        Command::Qubo(a) => cmd_qubo(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
