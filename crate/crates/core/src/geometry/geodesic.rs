use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};
use crate::instance::Matrix;

/// Symmetric nonnegative distances with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicMatrix {
    d: Matrix,
}

impl GeodesicMatrix {
    pub fn new(d: Matrix) -> Result<Self> {
        let n = d.n();
        for i in 0..n {
            if d.get(i, i) != 0.0 {
                return Err(Error::validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = d.get(i, j);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::validation(format!(
                        "distance ({i}, {j}) = {v} is not finite and nonnegative"
                    )));
                }
                if v != d.get(j, i) {
                    return Err(Error::validation(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GeodesicMatrix { d })
    }

    pub fn n(&self) -> usize {
        self.d.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.d
    }

    pub fn into_matrix(self) -> Matrix {
        self.d
    }

    pub fn diameter(&self) -> f64 {
        self.d.max_abs()
    }

    pub fn submatrix(&self, idx: &[usize]) -> GeodesicMatrix {
        GeodesicMatrix {
            d: self.d.submatrix(idx),
        }
    }
}

type EdgeGraph = UnGraph<(), f64, u32>;

fn edge_graph(mesh: &TriangleMesh) -> Result<EdgeGraph> {
    let n = mesh.n();
    let edges = mesh.edges();
    let mut uf = UnionFind::<usize>::new(n);
    for &(a, b) in &edges {
        uf.union(a, b);
    }
    let labels = uf.into_labeling();
    let mut roots: Vec<usize> = Vec::new();
    for v in 0..n {
        if labels[v] == v {
            roots.push(v);
        }
    }
    if roots.len() > 1 {
        // Name each component by its smallest vertex.
        let mut reps: Vec<usize> = roots
            .iter()
            .map(|&r| (0..n).find(|&v| labels[v] == r).unwrap())
            .collect();
        reps.sort_unstable();
        let shown: Vec<String> = reps.iter().take(8).map(|v| v.to_string()).collect();
        return Err(Error::validation(format!(
            "mesh edge graph has {} connected components (containing vertices {}{})",
            reps.len(),
            shown.join(", "),
            if reps.len() > 8 { ", ..." } else { "" }
        )));
    }
    let mut g = EdgeGraph::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    for (a, b) in edges {
        g.add_edge(NodeIndex::new(a), NodeIndex::new(b), mesh.edge_length(a, b));
    }
    Ok(g)
}

fn distances_from(g: &EdgeGraph, source: usize) -> Vec<f64> {
    let scores = dijkstra(g, NodeIndex::new(source), None, |e| *e.weight());
    let mut out = vec![f64::INFINITY; g.node_count()];
    for (node, d) in scores {
        out[node.index()] = d;
    }
    out
}

/// Edge-graph shortest paths between every pair of vertices.
pub fn geodesics(mesh: &TriangleMesh) -> Result<GeodesicMatrix> {
    let all: Vec<usize> = (0..mesh.n()).collect();
    geodesics_between(mesh, &all)
}

/// Edge-graph shortest paths on the full mesh, restricted to `idx`.
pub fn geodesics_between(mesh: &TriangleMesh, idx: &[usize]) -> Result<GeodesicMatrix> {
    if let Some(&v) = idx.iter().find(|&&v| v >= mesh.n()) {
        return Err(Error::validation(format!("vertex {v} is out of range")));
    }
    let g = edge_graph(mesh)?;
    let rows: Vec<Vec<f64>> = idx
        .par_iter()
        .map(|&s| {
            let full = distances_from(&g, s);
            idx.iter().map(|&t| full[t]).collect()
        })
        .collect();
    let k = idx.len();
    // Opposite directions can round differently.
    let d = Matrix::from_fn(k, |a, b| if a == b { 0.0 } else { rows[a][b].min(rows[b][a]) });
    GeodesicMatrix::new(d)
}

/// Greedy farthest-point sampling starting at vertex `seed % n`; ties go to
/// the smaller index.
pub fn farthest_point_sample(matrix: &GeodesicMatrix, count: usize, seed: u64) -> Result<Vec<usize>> {
    fps(matrix.n(), count, seed, |v| (0..matrix.n()).map(|w| matrix.get(v, w)).collect())
}

/// Farthest-point sampling on a mesh without materializing all-pairs
/// distances: one Dijkstra per chosen vertex.
pub fn farthest_point_sample_mesh(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count > mesh.n() {
        return Err(sample_error(count, mesh.n()));
    }
    let g = edge_graph(mesh)?;
    fps(mesh.n(), count, seed, |v| distances_from(&g, v))
}

fn sample_error(count: usize, n: usize) -> Error {
    Error::validation(format!("cannot sample {count} of {n} vertices"))
}

fn fps(n: usize, count: usize, seed: u64, row: impl Fn(usize) -> Vec<f64>) -> Result<Vec<usize>> {
    if count > n {
        return Err(sample_error(count, n));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut chosen = vec![(seed % n as u64) as usize];
    let mut nearest = row(chosen[0]);
    while chosen.len() < count {
        let mut best = None;
        for v in 0..n {
            if chosen.contains(&v) {
                continue;
            }
            if best.is_none_or(|b: usize| nearest[v] > nearest[b]) {
                best = Some(v);
            }
        }
        let v = best.expect("count <= n leaves a candidate");
        chosen.push(v);
        for (m, d) in nearest.iter_mut().zip(row(v)) {
            *m = m.min(d);
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::parse_off;

    fn path3() -> TriangleMesh {
        // Thin triangle strip whose edge graph contains the path 0-1-2 with
        // unit edges plus longer detours through vertex 3.
        TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 5.0, 0.0]],
            vec![[0, 1, 3], [1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn path_distance() {
        let g = geodesics(&path3()).unwrap();
        assert_eq!(g.get(0, 2), 2.0);
        assert_eq!(g.get(2, 0), 2.0);
    }

    #[test]
    fn unit_triangle() {
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 3f64.sqrt() / 2.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let g = geodesics(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 1.0 };
                assert!((g.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_without_second_diagonal() {
        // Diagonal 0-2 is an edge; corners 1 and 3 are joined only via 0 or 2.
        let m = parse_off("OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n").unwrap();
        let g = geodesics(&m).unwrap();
        assert_eq!(g.get(1, 3), 2.0);
        assert!((g.get(0, 2) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn disconnected_mesh_names_components() {
        let m = TriangleMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [5.0, 5.0, 5.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let err = geodesics(&m).unwrap_err().to_string();
        assert!(err.contains("2 connected components") && err.contains("0, 3"), "{err}");
    }

    #[test]
    fn grid_metric_properties() {
        let g = geodesics(&TriangleMesh::grid(4, 5)).unwrap();
        let n = g.n();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    assert!(g.get(a, c) <= g.get(a, b) + g.get(b, c) + 1e-12);
                }
            }
        }
        assert!((g.get(0, 19) - (3.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sampled_matches_submatrix() {
        let m = TriangleMesh::grid(4, 4);
        let full = geodesics(&m).unwrap();
        let idx = [3, 0, 12, 9];
        assert_eq!(geodesics_between(&m, &idx).unwrap(), full.submatrix(&idx));
    }

    #[test]
    fn fps_path_endpoints() {
        let m = TriangleMesh::grid(1, 1);
        assert_eq!(m.n(), 1);
        let line = GeodesicMatrix::new(Matrix::from_fn(5, |i, j| (i as f64 - j as f64).abs())).unwrap();
        assert_eq!(farthest_point_sample(&line, 2, 0).unwrap(), vec![0, 4]);
        assert_eq!(farthest_point_sample(&line, 5, 2).unwrap().len(), 5);
        assert!(farthest_point_sample(&line, 6, 0).is_err());
    }

    #[test]
    fn fps_second_point_is_farthest() {
        let m = TriangleMesh::grid(5, 7);
        let g = geodesics(&m).unwrap();
        for seed in 0..35 {
            let s = farthest_point_sample(&g, 2, seed).unwrap();
            let max = (0..g.n()).map(|v| g.get(s[0], v)).fold(0.0, f64::max);
            assert_eq!(g.get(s[0], s[1]), max);
            assert_eq!(farthest_point_sample_mesh(&m, 6, seed).unwrap(), farthest_point_sample(&g, 6, seed).unwrap());
        }
    }
}
