//! Per-vertex second fundamental form from a least-squares fit of the normal
//! field over the one-ring.
//!
//! The normals fed to the fit come from an osculating-sphere fit at each
//! vertex rather than from face averaging: averaged face normals carry an
//! O(h) error on irregular stars, which divided by the edge length leaves an
//! O(1) spurious traceless part. Sphere-fitted normals are exact whenever the
//! one-ring lies on a common sphere or plane.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector2};

use crate::exec;
use crate::mesh::{MeshMode, TriMesh, Vec3};

use super::GeometryError;

/// Symmetric 2×2 shape operator in an orthonormal tangent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeOperator(pub Matrix2<f64>);

impl ShapeOperator {
    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `|A|²`, the sum of squared principal curvatures.
    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `|Å|²`, computed from the traceless part directly so it is never
    /// negative.
    pub fn traceless_norm_squared(&self) -> f64 {
        let half = 0.5 * self.trace();
        (self.0 - Matrix2::from_diagonal_element(half)).norm_squared()
    }

    pub fn principal_curvatures(&self) -> (f64, f64) {
        let e = self.0.symmetric_eigenvalues();
        (e[0].max(e[1]), e[0].min(e[1]))
    }

    /// Shifts the operator isotropically so its trace equals `h`. The
    /// traceless part is left untouched.
    pub fn with_trace(self, h: f64) -> Self {
        let shift = 0.5 * (h - self.trace());
        ShapeOperator(self.0 + Matrix2::from_diagonal_element(shift))
    }
}

/// Orthonormal tangent basis for the plane orthogonal to `n`.
fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.6 {
        Vec3::x()
    } else if n.y.abs() < 0.6 {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Fits `S` with `P(ν_j − ν_i) ≈ S · P(x_j − x_i)` over the ring, where `P`
/// projects onto the tangent plane at `x_i`, then symmetrizes.
///
/// Returns `None` when the tangential edge vectors do not span the plane.
pub fn fit_shape_operator(center: &Vec3, normal: &Vec3, ring: &[(Vec3, Vec3)]) -> Option<ShapeOperator> {
    let (e1, e2) = tangent_frame(normal);
    let mut uu = Matrix2::zeros();
    let mut wu = Matrix2::zeros();
    let mut scale = 0.0;
    for (x, nu) in ring {
        let d = x - center;
        let dn = nu - normal;
        let u = Vector2::new(d.dot(&e1), d.dot(&e2));
        let w = Vector2::new(dn.dot(&e1), dn.dot(&e2));
        uu += u * u.transpose();
        wu += w * u.transpose();
        scale += u.norm_squared();
    }
    if scale == 0.0 || uu.determinant() <= 1e-10 * scale * scale {
        return None;
    }
    let s = wu * uu.try_inverse()?;
    Some(ShapeOperator(0.5 * (s + s.transpose())))
}

/// Unit normal of the sphere (or plane) through `center` that best fits the
/// ring points, oriented to agree with `reference`.
///
/// Fits `a·|d|² + b·d = 0` with `|b| = 1` over ring offsets `d`; `b` is the
/// eigenvector of the smallest eigenvalue of the reduced scatter matrix.
/// Returns `None` when the ring does not determine a unique normal.
pub fn osculating_sphere_normal(center: &Vec3, ring: &[Vec3], reference: &Vec3) -> Option<Vec3> {
    let mut scatter = Matrix3::zeros();
    let mut moment = Vec3::zeros();
    let mut quartic = 0.0;
    let mut scale = 0.0;
    for x in ring {
        let d = x - center;
        let q = d.norm_squared();
        scatter += d * d.transpose();
        moment += q * d;
        quartic += q * q;
        scale += q;
    }
    if quartic == 0.0 {
        return None;
    }
    let reduced = scatter - moment * moment.transpose() / quartic;
    let eig = SymmetricEigen::new(reduced);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    // The two tangential eigenvalues are O(h²); a second near-zero one means
    // the ring is collinear.
    if eig.eigenvalues[order[1]] <= 1e-8 * scale {
        return None;
    }
    let b: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
    Some(if b.dot(reference) < 0.0 { -b } else { b })
}

/// Sphere-fitted normals at every vertex, oriented like `reference`.
pub fn fitted_normals(mesh: &TriMesh, reference: &[Vec3]) -> Result<Vec<Vec3>, GeometryError> {
    let verts = mesh.vertices();
    exec::map_indices(mesh.n_vertices(), |i| {
        let ring: Vec<Vec3> = mesh.vertex_neighbors(i).iter().map(|&j| verts[j]).collect();
        osculating_sphere_normal(&verts[i], &ring, &reference[i]).ok_or(GeometryError::RankDeficientFit(i))
    })
    .into_iter()
    .collect()
}

/// Per-vertex `|A|` and `|Å|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFormField {
    pub second_form_norm: Vec<f64>,
    pub traceless_norm: Vec<f64>,
}

/// Fits the shape operator at every vertex (on sphere-fitted normals) and
/// reconciles its trace with the cotan mean curvature, so `|Å|² = |A|² − H²/n` holds with the same `H`
/// that drives the flow. Curves have a single principal curvature, hence
/// `|A| = |κ|` and `Å = 0`.
pub fn traceless_second_form_field(
    mesh: &TriMesh,
    normals: &[Vec3],
    mean_curvature: &[f64],
) -> Result<SecondFormField, GeometryError> {
    let n = mesh.n_vertices();
    if mesh.mode() == MeshMode::Curve {
        return Ok(SecondFormField {
            second_form_norm: mean_curvature.iter().map(|k| k.abs()).collect(),
            traceless_norm: vec![0.0; n],
        });
    }
    let verts = mesh.vertices();
    let fitted = fitted_normals(mesh, normals)?;
    let fits = exec::map_indices(n, |i| {
        let ring: Vec<(Vec3, Vec3)> = mesh
            .vertex_neighbors(i)
            .iter()
            .map(|&j| (verts[j], fitted[j]))
            .collect();
        fit_shape_operator(&verts[i], &fitted[i], &ring)
            .map(|s| s.with_trace(mean_curvature[i]))
            .ok_or(GeometryError::RankDeficientFit(i))
    });
    let mut second_form_norm = Vec::with_capacity(n);
    let mut traceless_norm = Vec::with_capacity(n);
    for s in fits {
        let s = s?;
        second_form_norm.push(s.norm_squared().sqrt());
        traceless_norm.push(s.traceless_norm_squared().sqrt());
    }
    Ok(SecondFormField {
        second_form_norm,
        traceless_norm,
    })
}
