//! Meshes, geodesic distances, sampling, initialization and evaluation for
//! shape matching.

mod eval;
mod geodesic;
mod mesh;
mod similarity;

pub use eval::{curve_to_csv, error_curve, uniform_thresholds};
pub use geodesic::{
    farthest_point_sample, farthest_point_sample_mesh, geodesics, geodesics_between,
    GeodesicMatrix,
};
pub use mesh::{load_mesh, parse_off, TriangleMesh};
pub use similarity::{histogram_similarity, lap_init, SimilarityMatrix, HISTOGRAM_BINS};
