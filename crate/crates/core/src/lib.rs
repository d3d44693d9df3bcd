//! Cyclic α-expansion for quadratic assignment problems.
//!
//! Each step picks a set of disjoint cycles, prices every subset of them as
//! a QUBO, and applies the best subset to the current permutation. The QUBO
//! is solved by a pluggable classical backend ([`qubo::BackendConfig`]).
//! On top of this sit an isometric shape-matching driver ([`qmatch`]) that
//! works on the worst-matched vertices only, mesh utilities ([`geometry`]),
//! and a QAPLIB harness ([`qaplib`]).

pub mod error;
pub mod expansion;
pub mod geometry;
pub mod instance;
pub mod perm;
pub mod qaplib;
pub mod qmatch;
pub mod qubo;
pub mod synthetic;

pub use error::{Error, Result};
pub use expansion::{
    build_qubo, expand_step, parametrize_additive, solve_random_cycles, ExpansionStep,
    RandomCycleConfig, SolveTrace, TraceRecord,
};
pub use instance::{
    bilinear_energy, cycle_to_sparse_delta, energy, MatchCost, Matrix, QapInstance,
    SparseMatchMatrix,
};
pub use perm::{apply_cycles, compose, decompose_involutions, CycleSet, Permutation};
pub use qmatch::{influence, qmatch_run, InfluenceReport, QMatchConfig, SubproblemMatrix};
pub use qubo::{solve, BackendConfig, IsingModel, Qubo, SampleSet};
