//! Discrete differential geometry on [`TriMesh`]: area weights, normals,
//! mean curvature, second fundamental form, gradients and integrals.
//!
//! Conventions: normals point outward, a round sphere of radius `r` has
//! `H = n / r > 0`, and `|Å|² = |A|² − H²/n`.

mod cotan;
mod diameter;
mod gradient;
mod shape;

use thiserror::Error;

use crate::exec;
use crate::mesh::{MeshMode, TriMesh, Vec3};

pub use cotan::{
    cotan_edge_weights, mean_curvature_field, mean_curvature_vectors, vertex_area_weights, vertex_normals,
};
pub use diameter::{diameter_estimate, DEFAULT_DIAMETER_SOURCES};
pub use gradient::{gradient_norm_field, gradient_vectors};
pub use shape::{
    fit_shape_operator, fitted_normals, osculating_sphere_normal, traceless_second_form_field,
    SecondFormField, ShapeOperator,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("face {0} has zero area")]
    DegenerateFace(usize),
    #[error("vertex {0} has a zero-length normal")]
    DegenerateNormal(usize),
    #[error("mesh is inward oriented (enclosed volume {0})")]
    InwardOrientation(f64),
    #[error("mesh is not closed")]
    NotClosed,
    #[error("one-ring fit at vertex {0} is rank deficient")]
    RankDeficientFit(usize),
}

/// Every per-vertex field the flow and its diagnostics need.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryCache {
    /// Mixed-Voronoi area weights (the discrete `dμ`).
    pub vertex_area: Vec<f64>,
    /// Outward unit normals.
    pub normal: Vec<Vec3>,
    /// Cotan mean curvature `H`.
    pub mean_curvature: Vec<f64>,
    /// `|Å|`, the traceless part of the second fundamental form.
    pub traceless_norm: Vec<f64>,
    /// `|A|`.
    pub second_form_norm: Vec<f64>,
    /// Intrinsic `|∇H|`.
    pub grad_h_norm: Vec<f64>,
}

impl GeometryCache {
    pub fn compute(mesh: &TriMesh) -> Result<Self, GeometryError> {
        let vertex_area = vertex_area_weights(mesh)?;
        let normal = vertex_normals(mesh)?;
        let mean_curvature = mean_curvature_field(mesh, &vertex_area, &normal)?;
        let second = traceless_second_form_field(mesh, &normal, &mean_curvature)?;
        let grad_h_norm = gradient_norm_field(mesh, &mean_curvature, &vertex_area)?;
        Ok(GeometryCache {
            vertex_area,
            normal,
            mean_curvature,
            traceless_norm: second.traceless_norm,
            second_form_norm: second.second_form_norm,
            grad_h_norm,
        })
    }

    pub fn total_area(&self) -> f64 {
        exec::sum(&self.vertex_area)
    }

    /// `∫ f dμ` for a per-vertex field given as a closure of the vertex index.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let terms: Vec<f64> = (0..self.vertex_area.len())
            .map(|i| f(i) * self.vertex_area[i])
            .collect();
        exec::sum(&terms)
    }
}

/// `Σ_i f_i · weights_i`.
pub fn surface_integral(weights: &[f64], f: &[f64]) -> f64 {
    assert_eq!(weights.len(), f.len(), "field length mismatch");
    let terms: Vec<f64> = weights.iter().zip(f).map(|(w, v)| w * v).collect();
    exec::sum(&terms)
}

/// Volume enclosed by a closed surface (area enclosed by a closed curve).
pub fn enclosed_volume(mesh: &TriMesh) -> Result<f64, GeometryError> {
    if mesh.mode() == MeshMode::Surface && !crate::mesh::validate(mesh).is_closed {
        return Err(GeometryError::NotClosed);
    }
    Ok(mesh.signed_volume())
}


#[cfg(test)]
mod tests {
    use super::fixtures::unit_cube;
    use super::*;
    use crate::mesh::{gen_ellipsoid, gen_icosphere, gen_polygon};
    use nalgebra::{Rotation3, Vector3};
    use std::f64::consts::PI;

    #[test]
    fn cube_integrals() {
        let cube = unit_cube();
        let w = vertex_area_weights(&cube).unwrap();
        assert!((surface_integral(&w, &[1.0; 8]) - 6.0).abs() < 1e-14);
        assert_eq!(enclosed_volume(&cube).unwrap(), 1.0);
    }

    #[test]
    fn sphere_integrals_of_h() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 3);
        let c = GeometryCache::compute(&m).unwrap();
        let int_h = surface_integral(&c.vertex_area, &c.mean_curvature);
        let h2: Vec<f64> = c.mean_curvature.iter().map(|h| h * h).collect();
        let int_h2 = surface_integral(&c.vertex_area, &h2);
        assert!((int_h / (8.0 * PI) - 1.0).abs() < 0.01, "{int_h}");
        assert!((int_h2 / (16.0 * PI) - 1.0).abs() < 0.01, "{int_h2}");
    }

    #[test]
    fn sphere_volume_converges() {
        let exact = 4.0 * PI / 3.0;
        let errs: Vec<f64> = (1..=4)
            .map(|k| (enclosed_volume(&gen_icosphere(1.0, Vec3::zeros(), k)).unwrap() - exact).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0] / 3.0), "{errs:?}");
        assert!(errs[2] / exact < 0.01);
    }

    #[test]
    fn open_mesh_has_no_volume() {
        let patch = fixtures::flat_patch(2);
        assert_eq!(enclosed_volume(&patch), Err(GeometryError::NotClosed));
    }

    #[test]
    fn curve_volume_is_shoelace() {
        let p = gen_polygon(4, 1.0);
        assert!((enclosed_volume(&p).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cache_invariants_on_ellipsoid() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 3);
        let c = GeometryCache::compute(&m).unwrap();
        let total: f64 = (0..m.faces().len()).map(|f| m.face_area(f)).sum();
        assert!((c.total_area() / total - 1.0).abs() < 1e-12);
        for i in 0..m.n_vertices() {
            assert!(c.vertex_area[i] > 0.0);
            assert!((c.normal[i].norm() - 1.0).abs() < 1e-12);
            let h = c.mean_curvature[i];
            let lhs = c.traceless_norm[i].powi(2) + h * h / 2.0;
            assert!((lhs - c.second_form_norm[i].powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn scale_covariance() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 2);
        let lambda = 2.0;
        let scaled = m.with_vertices(m.vertices().iter().map(|v| v * lambda).collect());
        let a = GeometryCache::compute(&m).unwrap();
        let b = GeometryCache::compute(&scaled).unwrap();
        for i in 0..m.n_vertices() {
            assert!((b.vertex_area[i] - lambda * lambda * a.vertex_area[i]).abs() < 1e-10);
            assert!((b.mean_curvature[i] - a.mean_curvature[i] / lambda).abs() < 1e-10);
            assert!((b.traceless_norm[i] - a.traceless_norm[i] / lambda).abs() < 1e-10);
        }
        let va = enclosed_volume(&m).unwrap();
        let vb = enclosed_volume(&scaled).unwrap();
        assert!((vb - lambda.powi(3) * va).abs() < 1e-10);
    }

    #[test]
    fn rigid_motion_invariance() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 2);
        let rot =
            Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(1.0, 2.0, -0.5)), 0.7);
        // Translation kept dyadic-small so rounding stays near 1e-15.
        let shift = Vec3::new(0.25, -0.5, 0.125);
        let moved = m.with_vertices(m.vertices().iter().map(|v| rot * v + shift).collect());
        let a = GeometryCache::compute(&m).unwrap();
        let b = GeometryCache::compute(&moved).unwrap();
        for i in 0..m.n_vertices() {
            assert!((a.vertex_area[i] - b.vertex_area[i]).abs() < 1e-10);
            assert!((a.mean_curvature[i] - b.mean_curvature[i]).abs() < 1e-10);
            assert!((a.second_form_norm[i] - b.second_form_norm[i]).abs() < 1e-10);
            assert!((a.traceless_norm[i] - b.traceless_norm[i]).abs() < 1e-10);
        }
        assert!((a.total_area() - b.total_area()).abs() < 1e-10);
        assert!((m.signed_volume() - moved.signed_volume()).abs() < 1e-10);
    }
}
