//! Time stepping for the surface-area-preserving mean curvature flow
//! `∂X/∂t = (1 − h·H)ν` with `h = ∫H dμ / ∫H² dμ`.
//!
//! `h` is frozen within a step and recomputed from the new geometry after
//! it. Uniform rescaling about the area centroid optionally repairs the
//! area drift introduced by time discretization.

mod run;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::geometry::{self, GeometryCache, GeometryError};
use crate::mesh::{MeshMode, TriMesh, Vec3};

pub use run::{run_flow, run_flow_with, FlowRun, Termination};

/// Explicit CFL constant for the cotan Laplacian.
pub const EXPLICIT_CFL_CONSTANT: f64 = 4.0;

/// Time steps below this are treated as a singularity.
pub const DT_UNDERFLOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowUpKind {
    /// `max|A|` exceeded the configured bound.
    CurvatureBound,
    /// The stable time step fell below [`DT_UNDERFLOW`].
    DtUnderflow,
    /// A NaN or infinity appeared in positions or fields.
    NonFinite,
    /// Triangle quality collapsed (minimum angle below the threshold or a
    /// degenerate element).
    MeshDegeneracy,
    /// `h ≤ 0`: the diffusion term `hΔ` is no longer parabolic.
    NonPositiveH,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("∫H² dμ = {int_h2:e} is numerically zero; the flow is undefined")]
    DegenerateMeanCurvature { int_h2: f64 },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("blow-up: {0:?}")]
    BlowUp(BlowUpKind),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepping {
    /// Forward Euler on positions.
    Explicit,
    /// Backward Euler on the `hΔ` part, forward on the unit normal transport.
    SemiImplicit,
}

/// Run parameters. All values must be positive; `roundness_tol` lies in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub stepping: Stepping,
    pub cfl_safety: f64,
    pub dt_max: f64,
    pub area_projection: bool,
    pub t_max: f64,
    /// Stop once `∫|Å|² dμ < roundness_tol · (initial value)`.
    pub roundness_tol: f64,
    /// Absolute bound on `max|A|`; `None` means 10³ × the initial `max|A|`.
    pub blowup_max_a: Option<f64>,
    /// Record a snapshot every this many steps.
    pub snapshot_every: usize,
    /// Smallest admissible triangle angle, radians.
    pub min_angle: f64,
    pub diameter_sources: usize,
    /// Seed for the first diameter source.
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            stepping: Stepping::Explicit,
            cfl_safety: 0.5,
            dt_max: 0.01,
            area_projection: true,
            t_max: 10.0,
            roundness_tol: 1e-6,
            blowup_max_a: None,
            snapshot_every: 5,
            min_angle: 1f64.to_radians(),
            diameter_sources: geometry::DEFAULT_DIAMETER_SOURCES,
            seed: 0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |what: &str| Err(FlowError::InvalidConfig(what.to_string()));
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if !(self.dt_max > 0.0) {
            return bad("dt_max must be positive");
        }
        if !(self.t_max > 0.0) {
            return bad("t_max must be positive");
        }
        if !(self.roundness_tol > 0.0 && self.roundness_tol < 1.0) {
            return bad("roundness_tol must lie in (0, 1)");
        }
        if matches!(self.blowup_max_a, Some(b) if !(b > 0.0)) {
            return bad("blowup_max_a must be positive");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1");
        }
        if !(self.min_angle > 0.0) {
            return bad("min_angle must be positive");
        }
        if self.diameter_sources == 0 {
            return bad("diameter_sources must be at least 1");
        }
        Ok(())
    }
}

/// Mesh plus the bookkeeping carried between steps.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub mesh: TriMesh,
    pub t: f64,
    pub h: f64,
    pub step_index: usize,
    /// `|M₀|`, fixed for the run.
    pub initial_area: f64,
    /// [`roundness_energy`] of `M₀`.
    pub initial_roundness: f64,
}

impl FlowState {
    pub fn new(mesh: TriMesh) -> Result<Self, FlowError> {
        let cache = GeometryCache::compute(&mesh)?;
        let h = compute_h(&cache)?;
        let initial_area = mesh.total_area();
        let initial_roundness = roundness_energy(mesh.mode(), &cache);
        Ok(FlowState {
            mesh,
            t: 0.0,
            h,
            step_index: 0,
            initial_area,
            initial_roundness,
        })
    }
}

/// What convergence is measured by: `∫|Å|² dμ` on surfaces. A curve's `Å`
/// vanishes identically, so curves use `∫(κ − κ̄)² ds` instead.
pub fn roundness_energy(mode: MeshMode, cache: &GeometryCache) -> f64 {
    match mode {
        MeshMode::Surface => cache.integrate(|i| cache.traceless_norm[i].powi(2)),
        MeshMode::Curve => {
            let mean = cache.integrate(|i| cache.mean_curvature[i]) / cache.total_area();
            cache.integrate(|i| (cache.mean_curvature[i] - mean).powi(2))
        }
    }
}

/// `h = ∫H dμ / ∫H² dμ`.
pub fn compute_h(cache: &GeometryCache) -> Result<f64, FlowError> {
    let int_h = cache.integrate(|i| cache.mean_curvature[i]);
    let int_h2 = cache.integrate(|i| cache.mean_curvature[i].powi(2));
    if !(int_h2 >= 1e-14 * cache.total_area()) {
        return Err(FlowError::DegenerateMeanCurvature { int_h2 });
    }
    Ok(int_h / int_h2)
}

/// Per-vertex `(1 − h·H_i)·ν_i`.
pub fn flow_velocity(cache: &GeometryCache, h: f64) -> Vec<Vec3> {
    exec::map_indices(cache.normal.len(), |i| {
        (1.0 - h * cache.mean_curvature[i]) * cache.normal[i]
    })
}

/// Stable step for the current state.
///
/// Explicit: `cfl · e_min² / (4h)`, capped by `dt_max`. Semi-implicit:
/// `cfl · e_min / max|1 − hH|` (displacement per step bounded by a fraction
/// of the shortest edge), capped by `dt_max`.
pub fn select_timestep(
    mesh: &TriMesh,
    cache: &GeometryCache,
    h: f64,
    config: &FlowConfig,
) -> Result<f64, FlowError> {
    if !(h > 0.0) {
        return Err(FlowError::BlowUp(BlowUpKind::NonPositiveH));
    }
    let e = mesh.min_edge_length();
    let dt = match config.stepping {
        Stepping::Explicit => config.cfl_safety * e * e / (EXPLICIT_CFL_CONSTANT * h),
        Stepping::SemiImplicit => {
            let vmax = cache
                .mean_curvature
                .iter()
                .map(|hh| (1.0 - h * hh).abs())
                .fold(0.0, f64::max);
            if vmax > 0.0 {
                config.cfl_safety * e / vmax
            } else {
                f64::INFINITY
            }
        }
    }
    .min(config.dt_max);
    if !dt.is_finite() {
        return Err(FlowError::BlowUp(BlowUpKind::NonFinite));
    }
    if dt < DT_UNDERFLOW {
        return Err(FlowError::BlowUp(BlowUpKind::DtUnderflow));
    }
    Ok(dt)
}

/// Symmetric positive semidefinite stiffness matrix `K` with
/// `Δx = −M⁻¹Kx` (cotan weights for surfaces, inverse edge lengths for
/// curves).
pub fn stiffness_matrix(mesh: &TriMesh) -> Result<CscMatrix<f64>, GeometryError> {
    let n = mesh.n_vertices();
    let weights = match mesh.mode() {
        MeshMode::Surface => geometry::cotan_edge_weights(mesh)?,
        MeshMode::Curve => mesh.edge_lengths().iter().map(|l| 1.0 / l).collect(),
    };
    let mut coo = CooMatrix::new(n, n);
    for (e, w) in mesh.edges().iter().zip(weights) {
        let [a, b] = e.v;
        coo.push(a, a, w);
        coo.push(b, b, w);
        coo.push(a, b, -w);
        coo.push(b, a, -w);
    }
    Ok(CscMatrix::from(&coo))
}

/// Advances positions by `dt` and recomputes `h`.
///
/// Explicit: `X ← X + dt·(1 − hH)ν`. Semi-implicit: solves
/// `(M + dt·h·K) X' = M (X + dt·ν)` per coordinate, i.e.
/// `(I − dt·h·Δ) X' = X + dt·ν` with the stiff `hΔ` term implicit.
/// `dt = 0` returns the state unchanged.
pub fn advance(
    state: &FlowState,
    cache: &GeometryCache,
    dt: f64,
    config: &FlowConfig,
) -> Result<FlowState, FlowError> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let next = step_positions(&state.mesh, cache, state.h, dt, config.stepping)?;
    let mesh = state.mesh.with_vertices(next);
    let new_cache =
        GeometryCache::compute(&mesh).map_err(|_| FlowError::BlowUp(BlowUpKind::MeshDegeneracy))?;
    let h = compute_h(&new_cache)?;
    Ok(FlowState {
        mesh,
        t: state.t + dt,
        h,
        step_index: state.step_index + 1,
        initial_area: state.initial_area,
        initial_roundness: state.initial_roundness,
    })
}

/// New vertex positions after one step of size `dt` with `h` frozen.
pub(crate) fn step_positions(
    mesh: &TriMesh,
    cache: &GeometryCache,
    h: f64,
    dt: f64,
    stepping: Stepping,
) -> Result<Vec<Vec3>, FlowError> {
    let next: Vec<Vec3> = match stepping {
        Stepping::Explicit => {
            let v = flow_velocity(cache, h);
            mesh.vertices()
                .iter()
                .zip(&v)
                .map(|(p, vi)| p + dt * vi)
                .collect()
        }
        Stepping::SemiImplicit => semi_implicit_positions(mesh, cache, h, dt)?,
    };
    if next.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(FlowError::BlowUp(BlowUpKind::NonFinite));
    }
    Ok(next)
}

fn semi_implicit_positions(
    mesh: &TriMesh,
    cache: &GeometryCache,
    h: f64,
    dt: f64,
) -> Result<Vec<Vec3>, FlowError> {
    let n = mesh.n_vertices();
    let k = stiffness_matrix(mesh)?;
    let mut coo = CooMatrix::new(n, n);
    for (i, a) in cache.vertex_area.iter().enumerate() {
        coo.push(i, i, *a);
    }
    let system = CscMatrix::from(&coo) + k * (dt * h);
    let chol = CscCholesky::factor(&system).map_err(|e| FlowError::LinearSolve(format!("{e:?}")))?;
    let mut rhs = DMatrix::zeros(n, 3);
    for (i, (p, nu)) in mesh.vertices().iter().zip(&cache.normal).enumerate() {
        let b = cache.vertex_area[i] * (p + dt * nu);
        for c in 0..3 {
            rhs[(i, c)] = b[c];
        }
    }
    let sol = chol.solve(&rhs);
    let out: Vec<Vec3> = (0..n)
        .map(|i| Vec3::new(sol[(i, 0)], sol[(i, 1)], sol[(i, 2)]))
        .collect();
    Ok(match mesh.mode() {
        // Keep curves exactly planar.
        MeshMode::Curve => out.into_iter().map(|p: Vec3| Vec3::new(p.x, p.y, 0.0)).collect(),
        MeshMode::Surface => out,
    })
}

/// Rescales the mesh about its area centroid so its area equals the initial
/// area. Returns the applied scale factor.
pub fn enforce_area_constraint(state: &mut FlowState) -> f64 {
    let area = state.mesh.total_area();
    let exponent = 1.0 / state.mesh.dimension() as f64;
    let s = (state.initial_area / area).powf(exponent);
    if s == 1.0 {
        return s;
    }
    let c = state.mesh.area_centroid();
    let v = state.mesh.vertices().iter().map(|p| c + s * (p - c)).collect();
    state.mesh.set_vertices(v);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_ellipsoid, gen_icosphere, gen_polygon};

    fn sphere_cache(r: f64, k: u32) -> (TriMesh, GeometryCache) {
        let m = gen_icosphere(r, Vec3::zeros(), k);
        let c = GeometryCache::compute(&m).unwrap();
        (m, c)
    }

    #[test]
    fn h_on_spheres() {
        let (_, c) = sphere_cache(1.0, 3);
        assert!((compute_h(&c).unwrap() - 0.5).abs() < 1e-4);
        let (_, c) = sphere_cache(2.0, 3);
        assert!((compute_h(&c).unwrap() - 1.0).abs() < 2e-4);
    }

    #[test]
    fn h_guard_on_zero_curvature() {
        let (_, mut c) = sphere_cache(1.0, 1);
        c.mean_curvature.iter_mut().for_each(|h| *h = 0.0);
        assert!(matches!(
            compute_h(&c),
            Err(FlowError::DegenerateMeanCurvature { .. })
        ));
    }

    #[test]
    fn first_variation_identity_is_exact() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 3);
        let c = GeometryCache::compute(&m).unwrap();
        let h = compute_h(&c).unwrap();
        let int_h2 = c.integrate(|i| c.mean_curvature[i].powi(2));
        let lhs = c.integrate(|i| c.mean_curvature[i] * (1.0 - h * c.mean_curvature[i]));
        assert!(lhs.abs() / int_h2 < 1e-12, "{lhs}");
    }

    #[test]
    fn velocity_cases() {
        let (_, mut c) = sphere_cache(1.0, 2);
        c.mean_curvature.iter_mut().for_each(|h| *h = 2.0);
        assert!(flow_velocity(&c, 0.5).iter().all(|v| v.norm() == 0.0));
        let v = flow_velocity(&c, 0.0);
        assert!(v.iter().zip(&c.normal).all(|(a, b)| a == b));
        // H > 1/h moves inward.
        let v = flow_velocity(&c, 1.0);
        assert!(v.iter().zip(&c.normal).all(|(a, n)| a.dot(n) < 0.0));
    }

    #[test]
    fn explicit_timestep_formula() {
        let (m, c) = sphere_cache(1.0, 3);
        let h = compute_h(&c).unwrap();
        let cfg = FlowConfig {
            dt_max: 1.0,
            ..FlowConfig::default()
        };
        let e = m.min_edge_length();
        let dt = select_timestep(&m, &c, h, &cfg).unwrap();
        assert_eq!(dt, 0.5 * e * e / (4.0 * h));
        let cfg2 = FlowConfig {
            cfl_safety: 1.0,
            ..cfg
        };
        let dt2 = select_timestep(&m, &c, h, &cfg2).unwrap();
        assert!((dt2 / dt - 2.0).abs() < 1e-15);
    }

    #[test]
    fn semi_implicit_timestep_hits_cap_on_sphere() {
        let (m, c) = sphere_cache(1.0, 3);
        let h = compute_h(&c).unwrap();
        let cfg = FlowConfig {
            stepping: Stepping::SemiImplicit,
            dt_max: 0.05,
            ..FlowConfig::default()
        };
        assert_eq!(select_timestep(&m, &c, h, &cfg).unwrap(), 0.05);
    }

    #[test]
    fn timestep_guards() {
        let (m, c) = sphere_cache(1.0, 1);
        let cfg = FlowConfig::default();
        assert!(matches!(
            select_timestep(&m, &c, -1.0, &cfg),
            Err(FlowError::BlowUp(BlowUpKind::NonPositiveH))
        ));
        assert!(matches!(
            select_timestep(&m, &c, 1e20, &cfg),
            Err(FlowError::BlowUp(BlowUpKind::DtUnderflow))
        ));
    }

    #[test]
    fn zero_dt_is_identity() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 2);
        let s = FlowState::new(m).unwrap();
        let c = GeometryCache::compute(&s.mesh).unwrap();
        for stepping in [Stepping::Explicit, Stepping::SemiImplicit] {
            let cfg = FlowConfig {
                stepping,
                ..FlowConfig::default()
            };
            let next = advance(&s, &c, 0.0, &cfg).unwrap();
            assert_eq!(next.t, s.t);
            assert_eq!(next.mesh.vertices(), s.mesh.vertices());
        }
    }

    #[test]
    fn one_step_reduces_traceless_energy() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 3);
        for stepping in [Stepping::Explicit, Stepping::SemiImplicit] {
            let cfg = FlowConfig {
                stepping,
                ..FlowConfig::default()
            };
            let s = FlowState::new(m.clone()).unwrap();
            let c = GeometryCache::compute(&s.mesh).unwrap();
            let dt = select_timestep(&s.mesh, &c, s.h, &cfg).unwrap();
            let next = advance(&s, &c, dt, &cfg).unwrap();
            let c2 = GeometryCache::compute(&next.mesh).unwrap();
            let e2 = c2.integrate(|i| c2.traceless_norm[i].powi(2));
            assert!(
                e2 < s.initial_roundness,
                "{stepping:?}: {e2} vs {}",
                s.initial_roundness
            );
        }
    }

    #[test]
    fn semi_implicit_sphere_is_nearly_stationary() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 3);
        let s = FlowState::new(m.clone()).unwrap();
        let c = GeometryCache::compute(&s.mesh).unwrap();
        let cfg = FlowConfig {
            stepping: Stepping::SemiImplicit,
            ..FlowConfig::default()
        };
        let next = advance(&s, &c, 0.01, &cfg).unwrap();
        let disp = m
            .vertices()
            .iter()
            .zip(next.mesh.vertices())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(disp < 1e-4, "{disp}");
    }

    #[test]
    fn area_projection() {
        let m = gen_ellipsoid(1.2, 1.0, 0.85, 2);
        let mut s = FlowState::new(m.clone()).unwrap();
        assert_eq!(enforce_area_constraint(&mut s), 1.0);
        assert_eq!(s.mesh.vertices(), m.vertices());

        let grown = m.with_vertices(m.vertices().iter().map(|p| 1.1 * p).collect());
        s.mesh = grown;
        let scale = enforce_area_constraint(&mut s);
        assert!((scale - 1.0 / 1.1).abs() < 1e-14);
        assert!((s.mesh.total_area() / s.initial_area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_area_projection_uses_length() {
        let c = gen_polygon(32, 1.0);
        let mut s = FlowState::new(c.clone()).unwrap();
        s.mesh = c.with_vertices(c.vertices().iter().map(|p| 1.5 * p).collect());
        let scale = enforce_area_constraint(&mut s);
        assert!((scale - 1.0 / 1.5).abs() < 1e-14);
        assert!((s.mesh.total_area() / s.initial_area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let bad = [
            FlowConfig {
                cfl_safety: 0.0,
                ..FlowConfig::default()
            },
            FlowConfig {
                roundness_tol: 1.0,
                ..FlowConfig::default()
            },
            FlowConfig {
                snapshot_every: 0,
                ..FlowConfig::default()
            },
            FlowConfig {
                blowup_max_a: Some(-1.0),
                ..FlowConfig::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(FlowError::InvalidConfig(_))));
        }
    }
}
