use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{check_size, Error, Result};
use crate::perm::Permutation;

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            if let Some(&v) = face.iter().find(|&&v| v >= n) {
                return Err(Error::validation(format!(
                    "face {f} references vertex {v}, but the mesh has {n} vertices"
                )));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::validation(format!("face {f} is degenerate: {face:?}")));
            }
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::validation("vertex coordinates must be finite"));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Unique undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.vertices[a], self.vertices[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }

    /// The same surface with vertex `i` renumbered to `p(i)`.
    pub fn permuted(&self, p: &Permutation) -> Result<TriangleMesh> {
        check_size(self.n(), p.len())?;
        let mut vertices = vec![[0.0; 3]; self.n()];
        for (i, v) in self.vertices.iter().enumerate() {
            vertices[p.apply(i)] = *v;
        }
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|v| p.apply(v)))
            .collect();
        Ok(TriangleMesh { vertices, faces })
    }

    /// Flat `rows × cols` grid in the xy-plane with unit spacing, two
    /// triangles per cell.
    pub fn grid(rows: usize, cols: usize) -> TriangleMesh {
        let mut vertices = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                vertices.push([c as f64, r as f64, 0.0]);
            }
        }
        let mut faces = Vec::new();
        for r in 0..rows.saturating_sub(1) {
            for c in 0..cols.saturating_sub(1) {
                let v = r * cols + c;
                faces.push([v, v + 1, v + cols + 1]);
                faces.push([v, v + cols + 1, v + cols]);
            }
        }
        TriangleMesh { vertices, faces }
    }

    pub fn to_off(&self) -> String {
        let mut out = format!("OFF\n{} {} 0\n", self.n(), self.faces.len());
        for v in &self.vertices {
            out.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
        }
        for f in &self.faces {
            out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        out
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_off(&text)
}

/// Parses ASCII OFF. Only triangular faces are accepted.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(line, format!("expected OFF header, found {header:?}")))?;
    let (count_line, counts) = if rest.trim().is_empty() {
        lines
            .next()
            .ok_or_else(|| Error::parse(line + 1, "missing vertex/face counts"))?
    } else {
        (line, rest.trim())
    };
    let counts = parse_numbers::<usize>(count_line, counts)?;
    if counts.len() < 2 {
        return Err(Error::parse(count_line, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| {
            Error::parse(count_line, format!("header declares {nv} vertices, found {k}"))
        })?;
        let xs = parse_numbers::<f64>(line, l)?;
        if xs.len() < 3 {
            return Err(Error::parse(line, "vertex needs three coordinates"));
        }
        vertices.push([xs[0], xs[1], xs[2]]);
    }

    let mut faces = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| {
            Error::parse(count_line, format!("header declares {nf} faces, found {k}"))
        })?;
        let mut tokens = l.split_whitespace();
        let arity: usize = parse_token(line, tokens.next())?;
        if arity != 3 {
            return Err(Error::parse(line, format!("only triangles are supported, found a {arity}-gon")));
        }
        let mut face = [0; 3];
        for slot in &mut face {
            *slot = parse_token(line, tokens.next())?;
        }
        faces.push(face);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, "unexpected data after the declared faces"));
    }

    TriangleMesh::new(vertices, faces).map_err(|e| match e {
        Error::Validation(msg) => Error::parse(count_line, msg),
        other => other,
    })
}

fn parse_numbers<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|t| parse_token(line, Some(t)))
        .collect()
}

fn parse_token<T: std::str::FromStr>(line: usize, token: Option<&str>) -> Result<T> {
    let t = token.ok_or_else(|| Error::parse(line, "missing value"))?;
    t.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {t:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";

    #[test]
    fn minimal_off() {
        let m = parse_off(TRI).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        assert_eq!(m.edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn comments_and_inline_counts() {
        let m = parse_off("# tri\nOFF 3 1 0\n0 0 0\n\n1 0 0 # x\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.n(), 3);
    }

    #[test]
    fn count_mismatch_reports_line() {
        let err = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let err = parse_off("OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_off("OFF\n3 1 0\n0 0 0\n1 0 x\n0 1 0\n3 0 1 2\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn rejects_bad_faces() {
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n").is_err());
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 1\n").is_err());
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n").is_err());
        assert!(parse_off("PLY\n").is_err());
    }

    #[test]
    fn off_round_trip() {
        let m = TriangleMesh::grid(3, 4);
        assert_eq!(m.n(), 12);
        assert_eq!(m.faces().len(), 12);
        assert_eq!(parse_off(&m.to_off()).unwrap(), m);
    }

    #[test]
    fn permuted_copy_keeps_edge_lengths() {
        let m = TriangleMesh::grid(3, 3);
        let p = Permutation::new(vec![4, 0, 8, 1, 7, 2, 6, 3, 5]).unwrap();
        let q = m.permuted(&p).unwrap();
        for (a, b) in m.edges() {
            assert_eq!(m.edge_length(a, b), q.edge_length(p.apply(a), p.apply(b)));
        }
    }
}
