use crate::exec;
use crate::mesh::{MeshMode, TriMesh, Vec3};

use super::GeometryError;

fn cot(u: &Vec3, v: &Vec3) -> f64 {
    u.dot(v) / u.cross(v).norm()
}

fn check_faces(mesh: &TriMesh) -> Result<(), GeometryError> {
    for f in 0..mesh.faces().len() {
        if mesh.face_area(f) <= 0.0 {
            return Err(GeometryError::DegenerateFace(f));
        }
    }
    Ok(())
}

/// Mixed-Voronoi vertex areas: Voronoi cells inside non-obtuse triangles,
/// half / quarter splits of obtuse ones. Curves use half the incident edge
/// lengths.
pub fn vertex_area_weights(mesh: &TriMesh) -> Result<Vec<f64>, GeometryError> {
    let n = mesh.n_vertices();
    let mut area = vec![0.0; n];
    match mesh.mode() {
        MeshMode::Curve => {
            for e in mesh.edges() {
                let l = (mesh.vertices()[e.v[1]] - mesh.vertices()[e.v[0]]).norm();
                area[e.v[0]] += 0.5 * l;
                area[e.v[1]] += 0.5 * l;
            }
        }
        MeshMode::Surface => {
            check_faces(mesh)?;
            for (fi, face) in mesh.faces().iter().enumerate() {
                let p = mesh.face_positions(fi);
                let fa = mesh.face_area(fi);
                let obtuse = (0..3).find(|&k| {
                    let u = p[(k + 1) % 3] - p[k];
                    let v = p[(k + 2) % 3] - p[k];
                    u.dot(&v) < 0.0
                });
                match obtuse {
                    Some(k) => {
                        for j in 0..3 {
                            area[face[j]] += if j == k { 0.5 * fa } else { 0.25 * fa };
                        }
                    }
                    None => {
                        // Circumcentric split; the three parts sum to the face
                        // area analytically, so assign the last as remainder.
                        let mut parts = [0.0; 3];
                        for k in 0..3 {
                            let a = p[k];
                            let b = p[(k + 1) % 3];
                            let c = p[(k + 2) % 3];
                            let cot_b = cot(&(a - b), &(c - b));
                            let cot_c = cot(&(a - c), &(b - c));
                            parts[k] =
                                ((a - c).norm_squared() * cot_b + (a - b).norm_squared() * cot_c) / 8.0;
                        }
                        parts[2] = fa - parts[0] - parts[1];
                        for k in 0..3 {
                            area[face[k]] += parts[k];
                        }
                    }
                }
            }
        }
    }
    Ok(area)
}

/// Outward unit normals: area-weighted face normals for surfaces, the
/// length-weighted average of edge normals for curves.
pub fn vertex_normals(mesh: &TriMesh) -> Result<Vec<Vec3>, GeometryError> {
    let vol = mesh.signed_volume();
    if vol <= 0.0 {
        return Err(GeometryError::InwardOrientation(vol));
    }
    let n = mesh.n_vertices();
    let mut acc = vec![Vec3::zeros(); n];
    match mesh.mode() {
        MeshMode::Surface => {
            for (fi, face) in mesh.faces().iter().enumerate() {
                let av = mesh.face_area_vector(fi);
                for &v in face {
                    acc[v] += av;
                }
            }
        }
        MeshMode::Curve => {
            for e in mesh.edges() {
                let d = mesh.vertices()[e.v[1]] - mesh.vertices()[e.v[0]];
                let outward = Vec3::new(d.y, -d.x, 0.0);
                acc[e.v[0]] += outward;
                acc[e.v[1]] += outward;
            }
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, a)| {
            let l = a.norm();
            if l > 0.0 && l.is_finite() {
                Ok(a / l)
            } else {
                Err(GeometryError::DegenerateNormal(i))
            }
        })
        .collect()
}

/// Per-edge cotan weights `(cot α + cot β) / 2`, aligned with
/// [`TriMesh::edges`]. Boundary edges get their single-triangle term.
pub fn cotan_edge_weights(mesh: &TriMesh) -> Result<Vec<f64>, GeometryError> {
    check_faces(mesh)?;
    Ok(mesh
        .edges()
        .iter()
        .map(|e| {
            e.faces
                .iter()
                .map(|&f| {
                    let face = mesh.faces()[f];
                    let opp = face
                        .iter()
                        .copied()
                        .find(|&v| v != e.v[0] && v != e.v[1])
                        .expect("triangle has a vertex opposite each edge");
                    let o = mesh.vertices()[opp];
                    0.5 * cot(&(mesh.vertices()[e.v[0]] - o), &(mesh.vertices()[e.v[1]] - o))
                })
                .sum()
        })
        .collect())
}

/// Mean curvature vectors `-Δx`: for surfaces
/// `(1/A_i) Σ_j w_ij (x_i − x_j)`; for curves the turning angle over the
/// vertex weight along the outward bisector normal.
pub fn mean_curvature_vectors(mesh: &TriMesh, weights: &[f64]) -> Result<Vec<Vec3>, GeometryError> {
    let n = mesh.n_vertices();
    match mesh.mode() {
        MeshMode::Surface => {
            let w = cotan_edge_weights(mesh)?;
            let mut acc = vec![Vec3::zeros(); n];
            for (e, we) in mesh.edges().iter().zip(&w) {
                let [a, b] = e.v;
                let d = mesh.vertices()[a] - mesh.vertices()[b];
                acc[a] += *we * d;
                acc[b] -= *we * d;
            }
            Ok(acc.into_iter().zip(weights).map(|(k, a)| k / *a).collect())
        }
        MeshMode::Curve => {
            let normals = vertex_normals(mesh)?;
            Ok(curve_curvature(mesh, weights)
                .into_iter()
                .zip(normals)
                .map(|(k, nu)| k * nu)
                .collect())
        }
    }
}

fn curve_curvature(mesh: &TriMesh, weights: &[f64]) -> Vec<f64> {
    let v = mesh.vertices();
    (0..mesh.n_vertices())
        .map(|i| {
            let (p, q) = mesh.curve_neighbors(i);
            let a = v[i] - v[p];
            let b = v[q] - v[i];
            let turn = (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
            turn / weights[i]
        })
        .collect()
}

/// Scalar mean curvature `H_i = (−Δx)_i · ν_i`, positive on convex spheres.
pub fn mean_curvature_field(
    mesh: &TriMesh,
    weights: &[f64],
    normals: &[Vec3],
) -> Result<Vec<f64>, GeometryError> {
    match mesh.mode() {
        MeshMode::Curve => Ok(curve_curvature(mesh, weights)),
        MeshMode::Surface => {
            let k = mean_curvature_vectors(mesh, weights)?;
            Ok(exec::map_indices(k.len(), |i| k[i].dot(&normals[i])))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::unit_cube;
    use crate::mesh::{gen_icosahedron, gen_icosphere, gen_polygon};
    use std::f64::consts::PI;

    #[test]
    fn cube_weights_sum_to_six() {
        let w = vertex_area_weights(&unit_cube()).unwrap();
        assert!((w.iter().sum::<f64>() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn icosahedron_weights_are_equal() {
        let w = vertex_area_weights(&gen_icosahedron()).unwrap();
        for x in &w {
            assert!((x - w[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_weights_approach_four_pi() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 3);
        let total: f64 = vertex_area_weights(&m).unwrap().iter().sum();
        assert!((total / (4.0 * PI) - 1.0).abs() < 0.005, "{total}");
    }

    #[test]
    fn degenerate_face_is_reported() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let m = TriMesh::from_raw_parts(v, vec![[0, 1, 2]]).unwrap();
        assert_eq!(vertex_area_weights(&m), Err(GeometryError::DegenerateFace(0)));
        assert_eq!(cotan_edge_weights(&m), Err(GeometryError::DegenerateFace(0)));
    }

    #[test]
    fn cube_corner_normal() {
        let n = vertex_normals(&unit_cube()).unwrap();
        let expect = -Vec3::new(1.0, 1.0, 1.0).normalize();
        // Every diagonal at the origin corner ends there, so its star is
        // symmetric under axis permutations.
        assert!((n[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn sphere_normals_converge_to_radial() {
        let c = Vec3::new(1.0, -2.0, 0.5);
        let errs: Vec<f64> = (2..=5)
            .map(|k| {
                let m = gen_icosphere(2.0, c, k);
                let n = vertex_normals(&m).unwrap();
                m.vertices()
                    .iter()
                    .zip(&n)
                    .map(|(v, nu)| (nu - (v - c) / 2.0).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0] / 1.9), "{errs:?}");
    }

    #[test]
    fn inward_mesh_normals_fail() {
        let m = gen_icosahedron();
        let flipped: Vec<[usize; 3]> = m.faces().iter().map(|f| [f[0], f[2], f[1]]).collect();
        let inward = TriMesh::from_raw_parts(m.vertices().to_vec(), flipped).unwrap();
        assert!(matches!(
            vertex_normals(&inward),
            Err(GeometryError::InwardOrientation(_))
        ));
    }

    fn max_h_error(radius: f64, k: u32) -> f64 {
        let m = gen_icosphere(radius, Vec3::zeros(), k);
        let w = vertex_area_weights(&m).unwrap();
        let n = vertex_normals(&m).unwrap();
        mean_curvature_field(&m, &w, &n)
            .unwrap()
            .iter()
            .map(|h| (h - 2.0 / radius).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sphere_mean_curvature() {
        let errs: Vec<f64> = (2..=5).map(|k| max_h_error(1.0, k)).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[1] < 1e-3, "{errs:?}");
        assert!(max_h_error(2.0, 3) < 5e-4);
    }

    #[test]
    fn polygon_curvature_tends_to_one() {
        let errs: Vec<f64> = [8, 32, 128, 512]
            .iter()
            .map(|&m| {
                let p = gen_polygon(m, 1.0);
                let w = vertex_area_weights(&p).unwrap();
                let n = vertex_normals(&p).unwrap();
                let k = mean_curvature_field(&p, &w, &n).unwrap();
                (k[0] - 1.0).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 1e-4);
    }
}
