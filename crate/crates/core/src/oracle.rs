//! Independent references: exact round spheres, refinement studies of the
//! discrete operators, and an empirical decay-rate probe for single
//! spherical-harmonic perturbations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{self, FitError};
use crate::flow::{self, FlowConfig, FlowError};
use crate::geometry::{self, GeometryCache, GeometryError};
use crate::mesh::{gen_ellipsoid, gen_icosphere, gen_perturbed_sphere, Bump, TriMesh, Vec3};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Exact values on a round sphere (`n = 2`) or circle (`n = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereReference {
    pub radius: f64,
    pub n: usize,
    pub mean_curvature: f64,
    pub h: f64,
    /// Surface area, or length for `n = 1`.
    pub area: f64,
    /// Enclosed volume, or enclosed area for `n = 1`.
    pub volume: f64,
}

pub fn sphere_reference(radius: f64, n: usize) -> Result<SphereReference, OracleError> {
    if !(radius > 0.0) {
        return Err(OracleError::InvalidInput(format!(
            "radius {radius} must be positive"
        )));
    }
    let (area, volume) = match n {
        1 => (2.0 * PI * radius, PI * radius * radius),
        2 => (4.0 * PI * radius * radius, 4.0 / 3.0 * PI * radius.powi(3)),
        _ => {
            return Err(OracleError::InvalidInput(format!(
                "dimension {n} not in {{1, 2}}"
            )))
        }
    };
    Ok(SphereReference {
        radius,
        n,
        mean_curvature: n as f64 / radius,
        h: radius / n as f64,
        area,
        volume,
    })
}

/// Shapes with an independent reference for [`refinement_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum StudyShape {
    Sphere { radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

impl StudyShape {
    fn mesh(&self, level: u32) -> TriMesh {
        match *self {
            StudyShape::Sphere { radius } => gen_icosphere(radius, Vec3::zeros(), level),
            StudyShape::Ellipsoid { a, b, c } => gen_ellipsoid(a, b, c, level),
        }
    }

    fn reference_area_volume(&self) -> (f64, f64) {
        match *self {
            StudyShape::Sphere { radius } => {
                let r = sphere_reference(radius, 2).expect("validated radius");
                (r.area, r.volume)
            }
            StudyShape::Ellipsoid { a, b, c } => (ellipsoid_area(a, b, c), 4.0 / 3.0 * PI * a * b * c),
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Surface area of the ellipsoid with semi-axes `a, b, c` by tensor
/// quadrature: Gauss–Legendre in `cos θ`, trapezoid (spectral for periodic
/// integrands) in `φ`.
pub fn ellipsoid_area(a: f64, b: f64, c: f64) -> f64 {
    let nodes = gauss_legendre(96);
    let nphi = 256;
    let mut total = 0.0;
    for (z, wz) in &nodes {
        // dμ = |r_θ × r_φ| dθ dφ and dθ·sin θ = d(cos θ).
        let s2 = 1.0 - z * z;
        let mut ring = 0.0;
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            let (sp, cp) = phi.sin_cos();
            ring +=
                (b * b * c * c * s2 * cp * cp + a * a * c * c * s2 * sp * sp + a * a * b * b * z * z).sqrt();
        }
        total += wz * ring * 2.0 * PI / nphi as f64;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelErrors {
    pub level: u32,
    pub area: f64,
    pub volume: f64,
    /// `max|H − n/r|`; spheres only.
    pub max_h: Option<f64>,
    /// `max|Å|`; spheres only.
    pub max_traceless: Option<f64>,
}

/// `log₂(e_k / e_{k+1})` between consecutive levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orders {
    pub area: Vec<f64>,
    pub volume: Vec<f64>,
    pub max_h: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub shape: StudyShape,
    pub levels: Vec<LevelErrors>,
    /// Present only for studies with at least three levels.
    pub orders: Option<Orders>,
}

impl ConvergenceStudy {
    /// Mean of the per-step orders.
    pub fn mean_order(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// JSON table, one row per level.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("study serializes")
    }
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Errors of the discrete operators against the shape's reference at each
/// subdivision level.
pub fn refinement_study(shape: StudyShape, levels: &[u32]) -> Result<ConvergenceStudy, OracleError> {
    if let StudyShape::Sphere { radius } = shape {
        sphere_reference(radius, 2)?;
    }
    if levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(OracleError::InvalidInput("levels must be consecutive".into()));
    }
    let (area_ref, vol_ref) = shape.reference_area_volume();
    let rows = levels
        .iter()
        .map(|&level| {
            let mesh = shape.mesh(level);
            let cache = GeometryCache::compute(&mesh)?;
            let (max_h, max_traceless) = match shape {
                StudyShape::Sphere { radius } => (
                    Some(
                        cache
                            .mean_curvature
                            .iter()
                            .map(|h| (h - 2.0 / radius).abs())
                            .fold(0.0, f64::max),
                    ),
                    Some(cache.traceless_norm.iter().copied().fold(0.0, f64::max)),
                ),
                StudyShape::Ellipsoid { .. } => (None, None),
            };
            Ok(LevelErrors {
                level,
                area: (mesh.total_area() - area_ref).abs(),
                volume: (geometry::enclosed_volume(&mesh)? - vol_ref).abs(),
                max_h,
                max_traceless,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let orders = (rows.len() >= 3).then(|| {
        let col = |f: fn(&LevelErrors) -> f64| orders(&rows.iter().map(f).collect::<Vec<_>>());
        Orders {
            area: col(|r| r.area),
            volume: col(|r| r.volume),
            max_h: rows[0]
                .max_h
                .is_some()
                .then(|| col(|r| r.max_h.expect("sphere rows carry H errors"))),
        }
    });
    Ok(ConvergenceStudy {
        shape,
        levels: rows,
        orders,
    })
}

/// Decay rate of `∫|Å|² dμ` for a sphere perturbed by the zonal harmonic of
/// degree `l`, fitted over the default window of the run.
///
/// A zero amplitude has no mode to follow and is rejected as
/// [`FitError::NonPositiveSamples`].
pub fn linearized_mode_rates(
    radius: f64,
    l: u32,
    amplitude: f64,
    subdiv: u32,
    config: &FlowConfig,
) -> Result<f64, OracleError> {
    sphere_reference(radius, 2)?;
    if amplitude.abs() > 0.02 * radius {
        return Err(OracleError::InvalidInput(format!(
            "amplitude {amplitude} exceeds the linear regime (0.02·radius)"
        )));
    }
    if amplitude == 0.0 {
        return Err(FitError::NonPositiveSamples { t: 0.0, value: 0.0 }.into());
    }
    let mesh = gen_perturbed_sphere(radius, amplitude, Bump::Harmonic { l, m: 0 }, subdiv);
    let run = flow::run_flow(mesh, config)?;
    let window = diagnostics::default_window(&run.series);
    Ok(diagnostics::fit_exponential_rate(&run.series, "int_traceless_sq", window)?.rate)
}
