use crate::mesh::{MeshMode, TriMesh, Vec3};

use super::GeometryError;

/// Per-vertex intrinsic gradient: face gradients of the piecewise-linear
/// interpolant, averaged to vertices with face-area weights. Curves average
/// the edge slopes along the tangent, weighted by edge length.
pub fn gradient_vectors(mesh: &TriMesh, f: &[f64]) -> Result<Vec<Vec3>, GeometryError> {
    assert_eq!(f.len(), mesh.n_vertices(), "field length mismatch");
    let n = mesh.n_vertices();
    let v = mesh.vertices();
    let mut acc = vec![Vec3::zeros(); n];
    let mut wsum = vec![0.0; n];
    match mesh.mode() {
        MeshMode::Surface => {
            for (fi, face) in mesh.faces().iter().enumerate() {
                let av = mesh.face_area_vector(fi);
                let area = av.norm();
                if area <= 0.0 {
                    return Err(GeometryError::DegenerateFace(fi));
                }
                let nrm = av / area;
                let mut g = Vec3::zeros();
                for k in 0..3 {
                    let e = v[face[(k + 2) % 3]] - v[face[(k + 1) % 3]];
                    g += f[face[k]] * nrm.cross(&e);
                }
                g /= 2.0 * area;
                for &i in face {
                    acc[i] += area * g;
                    wsum[i] += area;
                }
            }
        }
        MeshMode::Curve => {
            for e in mesh.edges() {
                let [a, b] = e.v;
                let d = v[b] - v[a];
                let len = d.norm();
                let g = (f[b] - f[a]) / (len * len) * d;
                for i in [a, b] {
                    acc[i] += len * g;
                    wsum[i] += len;
                }
            }
        }
    }
    Ok(acc
        .into_iter()
        .zip(wsum)
        .map(|(g, w)| if w > 0.0 { g / w } else { g })
        .collect())
}

/// `|∇f|` per vertex. The weights argument is accepted for interface
/// symmetry with the other field operators; averaging uses face areas.
pub fn gradient_norm_field(mesh: &TriMesh, f: &[f64], _weights: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(gradient_vectors(mesh, f)?.iter().map(|g| g.norm()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::flat_patch;
    use crate::geometry::GeometryCache;
    use crate::mesh::{gen_icosphere, gen_polygon};

    #[test]
    fn constant_field_has_zero_gradient() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 2);
        let g = gradient_norm_field(&m, &vec![3.5; m.n_vertices()], &[]).unwrap();
        assert!(g.iter().all(|x| *x < 1e-12));
    }

    #[test]
    fn affine_field_on_flat_patch_is_exact() {
        let m = flat_patch(4);
        let f: Vec<f64> = m.vertices().iter().map(|v| v.x).collect();
        let g = gradient_vectors(&m, &f).unwrap();
        for gi in g {
            assert!((gi - Vec3::x()).norm() < 1e-12, "{gi}");
        }
        let f: Vec<f64> = m.vertices().iter().map(|v| 3.0 * v.x - 4.0 * v.y + 1.0).collect();
        let g = gradient_norm_field(&m, &f, &[]).unwrap();
        assert!(g.iter().all(|x| (x - 5.0).abs() < 1e-12));
    }

    #[test]
    fn gradient_of_h_on_sphere_vanishes() {
        let errs: Vec<f64> = (2..=4)
            .map(|k| {
                let c = GeometryCache::compute(&gen_icosphere(1.0, Vec3::zeros(), k)).unwrap();
                c.grad_h_norm.iter().cloned().fold(0.0, f64::max)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn curve_gradient_of_arclength_like_field() {
        let p = gen_polygon(64, 1.0);
        let f: Vec<f64> = p.vertices().iter().map(|v| v.x).collect();
        let g = gradient_norm_field(&p, &f, &[]).unwrap();
        // d/ds x = −sin θ on the unit circle.
        for (gi, v) in g.iter().zip(p.vertices()) {
            assert!((gi - v.y.abs()).abs() < 0.01);
        }
    }
}
