use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{TriMesh, Vec3};

/// Radial bump profile for [`gen_perturbed_sphere`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bump {
    /// Schmidt semi-normalized real spherical harmonic of degree `l` and
    /// order `m` (|m| ≤ l); `m < 0` selects the sine component. The zonal
    /// harmonics (`m = 0`) are the Legendre polynomials, peaking at 1.
    Harmonic { l: u32, m: i32 },
    /// Gaussian `exp(-θ²/(2·width²))` in the angle θ from `direction`.
    Dent { direction: [f64; 3], width: f64 },
}

impl Bump {
    /// Evaluates the profile at a unit direction.
    pub fn eval(&self, u: &Vec3) -> f64 {
        match *self {
            Bump::Harmonic { l, m } => real_harmonic(l, m, u),
            Bump::Dent { direction, width } => {
                let d = Vec3::from(direction).normalize();
                let theta = u.cross(&d).norm().atan2(u.dot(&d));
                (-theta * theta / (2.0 * width * width)).exp()
            }
        }
    }
}

/// Associated Legendre function P_l^m(x), m ≥ 0, without the Condon-Shortley phase.
fn assoc_legendre(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = pll;
    }
    pll
}

fn real_harmonic(l: u32, m: i32, u: &Vec3) -> f64 {
    let am = m.unsigned_abs();
    assert!(am <= l, "harmonic order |m| = {am} exceeds degree {l}");
    let p = assoc_legendre(l, am, u.z.clamp(-1.0, 1.0));
    if am == 0 {
        return p;
    }
    let ratio: f64 = ((l - am + 1)..=(l + am)).map(|k| k as f64).product();
    let norm = (2.0 / ratio).sqrt();
    let phi = u.y.atan2(u.x);
    let trig = if m > 0 {
        (am as f64 * phi).cos()
    } else {
        (am as f64 * phi).sin()
    };
    norm * p * trig
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn gen_icosahedron() -> TriMesh {
    let (v, f) = unit_icosahedron();
    TriMesh::new(v, f).expect("icosahedron is closed and oriented")
}

fn unit_icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let vertices: Vec<Vec3> = raw.iter().map(|p| Vec3::from(*p).normalize()).collect();
    let mut faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for f in &mut faces {
        let [a, b, c] = f.map(|i| vertices[i]);
        if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
            f.swap(1, 2);
        }
    }
    (vertices, faces)
}

/// Unit-sphere icosphere: midpoint subdivision of the icosahedron, every new
/// vertex projected back onto the sphere.
fn unit_icosphere(subdivisions: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let (mut vertices, mut faces) = unit_icosahedron();
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push((0.5 * (vertices[a] + vertices[b])).normalize());
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Icosphere with `20·4^subdivisions` faces, all vertices at distance
/// `radius` from `center`.
///
/// # Panics
/// If `radius` is not positive.
pub fn gen_icosphere(radius: f64, center: Vec3, subdivisions: u32) -> TriMesh {
    assert!(radius > 0.0, "radius must be positive");
    let (v, f) = unit_icosphere(subdivisions);
    let v = v.into_iter().map(|p| center + radius * p).collect();
    TriMesh::new(v, f).expect("icosphere is closed and oriented")
}

/// Unit icosphere scaled by `(a, b, c)` along the coordinate axes.
pub fn gen_ellipsoid(a: f64, b: f64, c: f64, subdivisions: u32) -> TriMesh {
    assert!(a > 0.0 && b > 0.0 && c > 0.0, "semi-axes must be positive");
    let (v, f) = unit_icosphere(subdivisions);
    let v = v
        .into_iter()
        .map(|p| Vec3::new(a * p.x, b * p.y, c * p.z))
        .collect();
    TriMesh::new(v, f).expect("ellipsoid is closed and oriented")
}

/// Sphere of `radius` about the origin with radial offset `amplitude·bump(u)`.
///
/// # Panics
/// Unless `|amplitude| < radius / 2`.
pub fn gen_perturbed_sphere(radius: f64, amplitude: f64, bump: Bump, subdivisions: u32) -> TriMesh {
    assert!(radius > 0.0, "radius must be positive");
    assert!(
        amplitude.abs() < 0.5 * radius,
        "|amplitude| must be below radius/2"
    );
    let (v, f) = unit_icosphere(subdivisions);
    let v = v
        .into_iter()
        .map(|u| (radius + amplitude * bump.eval(&u)) * u)
        .collect();
    TriMesh::new(v, f).expect("perturbed sphere is closed and oriented")
}

/// Regular `sides`-gon inscribed in a circle of `radius`, counter-clockwise.
pub fn gen_polygon(sides: usize, radius: f64) -> TriMesh {
    assert!(radius > 0.0, "radius must be positive");
    let points = (0..sides)
        .map(|k| {
            let a = TAU * k as f64 / sides as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();
    TriMesh::curve(points).expect("polygon needs at least 3 sides")
}
