use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{TriMesh, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereFitError {
    #[error("vertices are (nearly) coplanar; no sphere fit")]
    DegenerateFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: [f64; 3],
    pub radius: f64,
    /// rms of `|v − center| − radius`.
    pub residual: f64,
}

/// Algebraic sphere fit (`|x|² = 2c·x + k`) followed by one Gauss–Newton
/// pass on the geometric distances.
pub fn best_fit_sphere(mesh: &TriMesh) -> Result<SphereFit, SphereFitError> {
    let pts = mesh.vertices();
    if pts.len() < 4 {
        return Err(SphereFitError::DegenerateFit);
    }
    // Work relative to the mean for conditioning and exact translation
    // equivariance up to rounding.
    let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let scale = pts.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(SphereFitError::DegenerateFit);
    }
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for p in pts {
        let q = (p - mean) / scale;
        let row = Vector4::new(2.0 * q.x, 2.0 * q.y, 2.0 * q.z, 1.0);
        ata += row * row.transpose();
        atb += row * q.norm_squared();
    }
    let eig = ata.symmetric_eigen();
    let emax = eig.eigenvalues.max();
    if eig.eigenvalues.min() <= 1e-10 * emax {
        return Err(SphereFitError::DegenerateFit);
    }
    let sol = ata.cholesky().ok_or(SphereFitError::DegenerateFit)?.solve(&atb);
    let mut c = Vec3::new(sol[0], sol[1], sol[2]);
    let mut r = (sol[3] + c.norm_squared()).max(0.0).sqrt();

    let m = pts.len();
    let mut jac = DMatrix::zeros(m, 4);
    let mut res = DVector::zeros(m);
    for (i, p) in pts.iter().enumerate() {
        let d = (p - mean) / scale - c;
        let dn = d.norm();
        if dn == 0.0 {
            return Err(SphereFitError::DegenerateFit);
        }
        let u = d / dn;
        jac[(i, 0)] = -u.x;
        jac[(i, 1)] = -u.y;
        jac[(i, 2)] = -u.z;
        jac[(i, 3)] = -1.0;
        res[i] = dn - r;
    }
    let step = jac
        .svd(true, true)
        .solve(&(-res), 1e-14)
        .map_err(|_| SphereFitError::DegenerateFit)?;
    c += Vec3::new(step[0], step[1], step[2]);
    r += step[3];

    let center = mean + scale * c;
    let radius = scale * r;
    let ss: f64 = pts.iter().map(|p| ((p - center).norm() - radius).powi(2)).sum();
    Ok(SphereFit {
        center: center.into(),
        radius,
        residual: (ss / m as f64).sqrt(),
    })
}
