//! Closed discrete hypersurfaces: oriented triangle meshes in R³ and closed
//! polylines in the plane.
//!
//! A [`TriMesh`] is an indexed face set plus an edge table built once at
//! construction. Curve meshes keep their points in cyclic order with `z = 0`
//! and carry no faces; every geometry routine dispatches on [`MeshMode`].

mod generate;
mod io;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{gen_ellipsoid, gen_icosahedron, gen_icosphere, gen_perturbed_sphere, gen_polygon, Bump};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh, MeshFormat};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("face {face} references vertex {index} but mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("face {0} is degenerate (repeated vertex index)")]
    DegenerateFace(usize),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
}

/// Intrinsic dimension of the hypersurface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshMode {
    /// Triangulated surface in R³ (n = 2).
    Surface,
    /// Closed polyline in the xy-plane (n = 1).
    Curve,
}

impl MeshMode {
    pub fn dimension(self) -> usize {
        match self {
            MeshMode::Surface => 2,
            MeshMode::Curve => 1,
        }
    }
}

/// Undirected edge with its (up to two) incident faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub v: [usize; 2],
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct Adjacency {
    edges: Vec<Edge>,
    vertex_faces: Vec<Vec<usize>>,
    vertex_neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    fn build(n_vertices: usize, faces: &[[usize; 3]]) -> Self {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut vertex_faces = vec![Vec::new(); n_vertices];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(fi);
                vertex_faces[f[k]].push(fi);
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); n_vertices];
        let edges = map
            .into_iter()
            .map(|((a, b), faces)| {
                vertex_neighbors[a].push(b);
                vertex_neighbors[b].push(a);
                Edge { v: [a, b], faces }
            })
            .collect();
        for nb in &mut vertex_neighbors {
            nb.sort_unstable();
        }
        Adjacency {
            edges,
            vertex_faces,
            vertex_neighbors,
        }
    }
}

/// Closed oriented triangulated surface, or a closed polyline in curve mode.
///
/// Meshes are immutable after construction apart from
/// [`TriMesh::set_vertices`], which moves vertices without touching
/// connectivity.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    mode: MeshMode,
    adjacency: Adjacency,
}

/// Connectivity and shape-quality summary produced by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshQualityReport {
    pub is_closed: bool,
    pub is_oriented: bool,
    /// Smallest triangle area (smallest edge length in curve mode).
    pub min_face_area: f64,
    /// Smallest interior triangle angle in radians (smallest interior
    /// polygon angle in curve mode).
    pub min_angle: f64,
    pub boundary_edge_count: usize,
}

impl MeshQualityReport {
    pub fn is_valid(&self) -> bool {
        self.is_closed && self.is_oriented
    }
}

impl TriMesh {
    /// Builds a surface mesh and checks that it is a closed, consistently
    /// oriented manifold with outward orientation.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = Self::from_raw_parts(vertices, faces)?;
        mesh.require_valid()?;
        Ok(mesh)
    }

    /// Builds a surface mesh checking only index ranges and degenerate faces.
    /// Open patches are allowed; use [`validate`] to inspect topology.
    pub fn from_raw_parts(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let count = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &index in f {
                if index >= count {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index,
                        count,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace(fi));
            }
        }
        let adjacency = Adjacency::build(count, &faces);
        Ok(TriMesh {
            vertices,
            faces,
            mode: MeshMode::Surface,
            adjacency,
        })
    }

    /// Builds a closed curve from 2D points in cyclic order.
    pub fn curve(points: Vec<[f64; 2]>) -> Result<Self, MeshError> {
        if points.len() < 3 {
            return Err(MeshError::Topology(format!(
                "closed curve needs at least 3 points, got {}",
                points.len()
            )));
        }
        let n = points.len();
        let vertices = points.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect();
        let vertex_neighbors = (0..n)
            .map(|i| {
                let mut nb = vec![(i + n - 1) % n, (i + 1) % n];
                nb.sort_unstable();
                nb
            })
            .collect();
        let edges = (0..n)
            .map(|i| Edge {
                v: [i, (i + 1) % n],
                faces: Vec::new(),
            })
            .collect();
        let mesh = TriMesh {
            vertices,
            faces: Vec::new(),
            mode: MeshMode::Curve,
            adjacency: Adjacency {
                edges,
                vertex_faces: vec![Vec::new(); n],
                vertex_neighbors,
            },
        };
        mesh.require_valid()?;
        Ok(mesh)
    }

    fn require_valid(&self) -> Result<(), MeshError> {
        let report = validate(self);
        if report.boundary_edge_count > 0 {
            return Err(MeshError::Topology(format!(
                "{} boundary edges",
                report.boundary_edge_count
            )));
        }
        if !report.is_closed {
            return Err(MeshError::Topology("non-manifold edge".into()));
        }
        if !report.is_oriented {
            return Err(MeshError::Topology(
                "inconsistent or inward face orientation".into(),
            ));
        }
        Ok(())
    }

    pub fn mode(&self) -> MeshMode {
        self.mode
    }

    /// Intrinsic dimension n of the hypersurface.
    pub fn dimension(&self) -> usize {
        self.mode.dimension()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.adjacency.edges
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.adjacency.vertex_faces[v]
    }

    /// Sorted one-ring neighbours of `v`.
    pub fn vertex_neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency.vertex_neighbors[v]
    }

    /// Cyclic predecessor and successor of a curve vertex.
    pub fn curve_neighbors(&self, v: usize) -> (usize, usize) {
        let n = self.vertices.len();
        ((v + n - 1) % n, (v + 1) % n)
    }

    /// Curve points as 2D coordinates.
    pub fn curve_points(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| [v.x, v.y]).collect()
    }

    /// Replaces vertex positions, keeping connectivity.
    ///
    /// # Panics
    /// If the vertex count changes.
    pub fn set_vertices(&mut self, vertices: Vec<Vec3>) {
        assert_eq!(vertices.len(), self.vertices.len(), "vertex count changed");
        self.vertices = vertices;
    }

    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        let mut out = self.clone();
        out.set_vertices(vertices);
        out
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Area vector (normal scaled by area) of face `f`.
    pub fn face_area_vector(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_positions(f);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_area_vector(f).norm()
    }

    /// Total surface area (curve length in curve mode).
    pub fn total_area(&self) -> f64 {
        match self.mode {
            MeshMode::Surface => (0..self.faces.len()).map(|f| self.face_area(f)).sum(),
            MeshMode::Curve => self.edge_lengths().iter().sum(),
        }
    }

    /// Length of every edge in [`TriMesh::edges`] order.
    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges()
            .iter()
            .map(|e| (self.vertices[e.v[1]] - self.vertices[e.v[0]]).norm())
            .collect()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Area-weighted centroid of the surface (length-weighted for curves).
    pub fn area_centroid(&self) -> Vec3 {
        let mut acc = Vec3::zeros();
        let mut total = 0.0;
        match self.mode {
            MeshMode::Surface => {
                for f in 0..self.faces.len() {
                    let [a, b, c] = self.face_positions(f);
                    let w = self.face_area(f);
                    acc += w * (a + b + c) / 3.0;
                    total += w;
                }
            }
            MeshMode::Curve => {
                for e in self.edges() {
                    let (a, b) = (self.vertices[e.v[0]], self.vertices[e.v[1]]);
                    let w = (b - a).norm();
                    acc += w * 0.5 * (a + b);
                    total += w;
                }
            }
        }
        acc / total
    }

    /// Signed enclosed volume (signed enclosed area for curves).
    pub fn signed_volume(&self) -> f64 {
        match self.mode {
            MeshMode::Surface => {
                let mut vol = 0.0;
                for f in 0..self.faces.len() {
                    let [a, b, c] = self.face_positions(f);
                    vol += a.dot(&b.cross(&c));
                }
                vol / 6.0
            }
            MeshMode::Curve => {
                let n = self.vertices.len();
                let mut area = 0.0;
                for i in 0..n {
                    let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
                    area += p.x * q.y - q.x * p.y;
                }
                0.5 * area
            }
        }
    }
}

fn triangle_angles(p: [Vec3; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let u = p[(k + 1) % 3] - p[k];
        let v = p[(k + 2) % 3] - p[k];
        out[k] = u.cross(&v).norm().atan2(u.dot(&v));
    }
    out
}

/// Inspects connectivity and element shape.
///
/// `is_oriented` requires every interior edge to be traversed in opposite
/// directions by its two faces and the enclosed volume to be positive.
pub fn validate(mesh: &TriMesh) -> MeshQualityReport {
    match mesh.mode {
        MeshMode::Surface => validate_surface(mesh),
        MeshMode::Curve => validate_curve(mesh),
    }
}

fn validate_surface(mesh: &TriMesh) -> MeshQualityReport {
    let mut boundary = 0;
    let mut manifold = true;
    let mut consistent = true;
    for e in mesh.edges() {
        match e.faces.len() {
            1 => boundary += 1,
            2 => {
                let dir = |f: usize| {
                    let face = mesh.faces[f];
                    (0..3).any(|k| face[k] == e.v[0] && face[(k + 1) % 3] == e.v[1])
                };
                if dir(e.faces[0]) == dir(e.faces[1]) {
                    consistent = false;
                }
            }
            _ => manifold = false,
        }
    }
    let mut min_face_area = f64::INFINITY;
    let mut min_angle = f64::INFINITY;
    for f in 0..mesh.faces.len() {
        min_face_area = min_face_area.min(mesh.face_area(f));
        for a in triangle_angles(mesh.face_positions(f)) {
            min_angle = min_angle.min(a);
        }
    }
    let is_closed = boundary == 0 && manifold && !mesh.faces.is_empty();
    MeshQualityReport {
        is_closed,
        is_oriented: consistent && (!is_closed || mesh.signed_volume() > 0.0),
        min_face_area,
        min_angle,
        boundary_edge_count: boundary,
    }
}

fn validate_curve(mesh: &TriMesh) -> MeshQualityReport {
    let n = mesh.n_vertices();
    let mut min_angle = f64::INFINITY;
    for i in 0..n {
        let (p, q) = mesh.curve_neighbors(i);
        let x = mesh.vertices[i];
        let u = mesh.vertices[p] - x;
        let v = mesh.vertices[q] - x;
        min_angle = min_angle.min(u.cross(&v).norm().atan2(u.dot(&v)));
    }
    MeshQualityReport {
        is_closed: true,
        is_oriented: mesh.signed_volume() > 0.0,
        min_face_area: mesh.min_edge_length(),
        min_angle: if min_angle.is_finite() { min_angle } else { PI },
        boundary_edge_count: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        (
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        )
    }

    #[test]
    fn tetrahedron_is_valid() {
        let (v, f) = tetra();
        let m = TriMesh::new(v, f).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.faces().len(), 4);
        assert_eq!(m.edges().len(), 6);
        assert!((m.signed_volume() - 1.0 / 6.0).abs() < 1e-15);
        let r = validate(&m);
        assert!(r.is_closed && r.is_oriented);
        assert_eq!(r.boundary_edge_count, 0);
    }

    #[test]
    fn icosahedron_minus_face_has_three_boundary_edges() {
        let ico = gen_icosahedron();
        let mut faces = ico.faces().to_vec();
        faces.pop();
        let open = TriMesh::from_raw_parts(ico.vertices().to_vec(), faces.clone()).unwrap();
        let r = validate(&open);
        assert!(!r.is_closed);
        assert_eq!(r.boundary_edge_count, 3);
        let err = TriMesh::new(ico.vertices().to_vec(), faces).unwrap_err();
        assert!(err.to_string().contains("3 boundary edges"), "{err}");
    }

    #[test]
    fn flipped_face_breaks_orientation() {
        let ico = gen_icosahedron();
        let mut faces = ico.faces().to_vec();
        faces[5].swap(1, 2);
        let m = TriMesh::from_raw_parts(ico.vertices().to_vec(), faces).unwrap();
        let r = validate(&m);
        assert!(r.is_closed);
        assert!(!r.is_oriented);
    }

    #[test]
    fn inward_mesh_is_rejected() {
        let (v, mut f) = tetra();
        for face in &mut f {
            face.swap(1, 2);
        }
        assert!(matches!(TriMesh::new(v, f), Err(MeshError::Topology(_))));
    }

    #[test]
    fn bad_indices_and_degenerate_faces() {
        let (v, _) = tetra();
        assert!(matches!(
            TriMesh::from_raw_parts(v.clone(), vec![[0, 1, 7]]),
            Err(MeshError::IndexOutOfRange { index: 7, .. })
        ));
        assert!(matches!(
            TriMesh::from_raw_parts(v, vec![[0, 1, 1]]),
            Err(MeshError::DegenerateFace(0))
        ));
    }

    #[test]
    fn curve_orientation() {
        let ccw = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let m = TriMesh::curve(ccw.clone()).unwrap();
        assert_eq!(m.mode(), MeshMode::Curve);
        assert!((m.signed_volume() - 1.0).abs() < 1e-15);
        assert!((m.total_area() - 4.0).abs() < 1e-15);
        let mut cw = ccw;
        cw.reverse();
        assert!(TriMesh::curve(cw).is_err());
    }
}
