//! Per-snapshot monitoring: the quantities that control convergence, the
//! residuals of the flow's evolution identities, exponential decay fits and
//! the roundness of the final shape.

mod fit;
mod io;
mod sphere;

use serde::{Deserialize, Serialize};

use crate::flow::{FlowConfig, FlowState};
use crate::geometry::{self, GeometryCache};
use crate::mesh;

pub use fit::{default_window, fit_exponential, fit_exponential_rate, ExpFit, FitError};
pub use io::{
    read_ode_terms_csv, read_series_csv, summarize, write_ode_terms_csv, write_series_csv, FinalSphere,
    MaxResiduals, SeriesIoError, Summary,
};
pub use sphere::{best_fit_sphere, SphereFit, SphereFitError};

/// One row of `series.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub area: f64,
    pub volume: f64,
    pub h: f64,
    pub int_h: f64,
    pub int_h2: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub max_abs_a: f64,
    pub max_traceless: f64,
    pub int_traceless_sq: f64,
    pub max_grad_h: f64,
    pub sup_one_minus_hh: f64,
    pub diameter_est: f64,
    /// `∫|H|^{n−1} dμ`.
    pub int_hpow: f64,
    pub min_angle: f64,
    /// Product of the projection scale factors applied since the previous
    /// snapshot (1 without projection).
    pub area_scale_applied: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 17] = [
        "t",
        "area",
        "volume",
        "h",
        "int_H",
        "int_H2",
        "min_H",
        "max_H",
        "max_abs_A",
        "max_traceless",
        "int_traceless_sq",
        "max_grad_H",
        "sup_one_minus_hH",
        "diameter_est",
        "int_Hpow",
        "min_angle",
        "area_scale_applied",
    ];

    pub fn to_row(&self) -> [f64; 17] {
        [
            self.t,
            self.area,
            self.volume,
            self.h,
            self.int_h,
            self.int_h2,
            self.min_h,
            self.max_h,
            self.max_abs_a,
            self.max_traceless,
            self.int_traceless_sq,
            self.max_grad_h,
            self.sup_one_minus_hh,
            self.diameter_est,
            self.int_hpow,
            self.min_angle,
            self.area_scale_applied,
        ]
    }

    pub fn from_row(r: [f64; 17]) -> Self {
        DiagnosticsRecord {
            t: r[0],
            area: r[1],
            volume: r[2],
            h: r[3],
            int_h: r[4],
            int_h2: r[5],
            min_h: r[6],
            max_h: r[7],
            max_abs_a: r[8],
            max_traceless: r[9],
            int_traceless_sq: r[10],
            max_grad_h: r[11],
            sup_one_minus_hh: r[12],
            diameter_est: r[13],
            int_hpow: r[14],
            min_angle: r[15],
            area_scale_applied: r[16],
        }
    }

    /// Value of a column by its CSV name.
    pub fn field(&self, name: &str) -> Option<f64> {
        Self::COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.to_row()[i])
    }

    pub fn is_finite(&self) -> bool {
        self.to_row().iter().all(|x| x.is_finite())
    }
}

/// Right-hand sides of the evolution equations for `h` and `∫H² dμ`,
/// evaluated at a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTerms {
    pub t: f64,
    /// `[∫ −(1−2hH)(1−hH)|A|² + H²(1−hH)² + 2h²|∇H|² dμ] / ∫H² dμ`.
    pub dh_dt: f64,
    /// `∫ H³(1−hH) − 2h|∇H|² − 2(1−hH)H|A|² dμ`.
    pub d_int_h2_dt: f64,
}

/// Snapshot records in time order plus the run's dimension and metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Hypersurface dimension `n` (2 for surfaces, 1 for curves).
    pub dimension: usize,
    pub records: Vec<DiagnosticsRecord>,
    /// Parallel to `records` when produced by a run; empty after reading a
    /// bare `series.csv`.
    pub ode_terms: Vec<OdeTerms>,
    /// Config echo and provenance.
    pub metadata: serde_json::Value,
}

impl TimeSeries {
    pub fn new(dimension: usize) -> Self {
        TimeSeries {
            dimension,
            ..TimeSeries::default()
        }
    }

    pub fn push(&mut self, record: DiagnosticsRecord, ode: OdeTerms) {
        self.records.push(record);
        self.ode_terms.push(ode);
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.field(name)).collect()
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// All record fields for the current state. `area_scale_applied` is passed
/// through from the run loop.
pub fn record_snapshot(
    state: &FlowState,
    cache: &GeometryCache,
    config: &FlowConfig,
    area_scale_applied: f64,
) -> DiagnosticsRecord {
    let mesh = &state.mesh;
    let n = mesh.dimension() as i32;
    let hh = &cache.mean_curvature;
    let h = state.h;
    let one_minus: Vec<f64> = hh.iter().map(|x| (1.0 - h * x).abs()).collect();
    DiagnosticsRecord {
        t: state.t,
        area: mesh.total_area(),
        volume: mesh.signed_volume(),
        h,
        int_h: cache.integrate(|i| hh[i]),
        int_h2: cache.integrate(|i| hh[i] * hh[i]),
        min_h: hh.iter().copied().fold(f64::INFINITY, f64::min),
        max_h: max_of(hh),
        max_abs_a: max_of(&cache.second_form_norm),
        max_traceless: max_of(&cache.traceless_norm),
        int_traceless_sq: cache.integrate(|i| cache.traceless_norm[i].powi(2)),
        max_grad_h: max_of(&cache.grad_h_norm),
        sup_one_minus_hh: max_of(&one_minus),
        diameter_est: geometry::diameter_estimate(mesh, config.diameter_sources, config.seed),
        int_hpow: cache.integrate(|i| hh[i].abs().powi(n - 1)),
        min_angle: mesh::validate(mesh).min_angle,
        area_scale_applied,
    }
}

/// Evaluates both evolution-equation right-hand sides at the current state.
pub fn ode_terms(t: f64, h: f64, cache: &GeometryCache) -> OdeTerms {
    let hh = &cache.mean_curvature;
    let a2 = |i: usize| cache.second_form_norm[i].powi(2);
    let g2 = |i: usize| cache.grad_h_norm[i].powi(2);
    let int_h2 = cache.integrate(|i| hh[i] * hh[i]);
    let num = cache.integrate(|i| {
        let u = 1.0 - h * hh[i];
        -(1.0 - 2.0 * h * hh[i]) * u * a2(i) + hh[i] * hh[i] * u * u + 2.0 * h * h * g2(i)
    });
    let d_int_h2_dt = cache.integrate(|i| {
        let u = 1.0 - h * hh[i];
        hh[i].powi(3) * u - 2.0 * h * g2(i) - 2.0 * u * hh[i] * a2(i)
    });
    OdeTerms {
        t,
        dh_dt: num / int_h2,
        d_int_h2_dt,
    }
}

/// `|∫H(1−hH) dμ| / (1 + ∫H² dμ)`, from the record's own integrals.
pub fn first_variation_residual(r: &DiagnosticsRecord) -> f64 {
    (r.int_h - r.h * r.int_h2).abs() / (1.0 + r.int_h2.abs())
}

/// Residuals of the `h` and `∫H²` evolution equations over one interval
/// between adjacent snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResidual {
    pub t0: f64,
    pub t1: f64,
    pub r_h: f64,
    pub r_h2: f64,
}

/// Per-snapshot `r_area` and per-interval `(r_h, r_H2)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub r_area: Vec<f64>,
    pub intervals: Vec<IntervalResidual>,
}

impl IdentityResiduals {
    pub fn max_area(&self) -> Option<f64> {
        self.r_area.iter().copied().reduce(f64::max)
    }
    pub fn max_h(&self) -> Option<f64> {
        self.intervals.iter().map(|r| r.r_h).reduce(f64::max)
    }
    pub fn max_h2(&self) -> Option<f64> {
        self.intervals.iter().map(|r| r.r_h2).reduce(f64::max)
    }
}

/// Forward-difference residuals of the evolution identities.
///
/// The right endpoint of each interval is mapped back to its pre-projection
/// state by undoing the recorded scale factor `s` (`h` scales like length,
/// `∫H² dμ` like `length^{n−2}`), so projection neither hides nor creates
/// residual. Intervals need `ode_terms`; without them only `r_area` is
/// produced.
pub fn identity_residuals(series: &TimeSeries) -> IdentityResiduals {
    let r_area = series.records.iter().map(first_variation_residual).collect();
    let n = series.dimension.max(1) as i32;
    let intervals = if series.ode_terms.len() == series.records.len() {
        series
            .records
            .windows(2)
            .zip(&series.ode_terms)
            .map(|(w, ode)| {
                let (a, b) = (&w[0], &w[1]);
                let dt = b.t - a.t;
                let s = b.area_scale_applied;
                let h_pre = b.h / s;
                let h2_pre = b.int_h2 / s.powi(n - 2);
                IntervalResidual {
                    t0: a.t,
                    t1: b.t,
                    r_h: ((h_pre - a.h) / dt - ode.dh_dt).abs(),
                    r_h2: ((h2_pre - a.int_h2) / dt - ode.d_int_h2_dt).abs(),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    IdentityResiduals { r_area, intervals }
}

/// `δ = 1/(4nΛ₁²|M₀|)` with `Λ₁` the largest of `max|A|`, `h`, `1/h`,
/// `∫H²` and `1/∫H²` over all snapshots.
pub fn paper_decay_bound(series: &TimeSeries) -> f64 {
    let lambda = series
        .records
        .iter()
        .flat_map(|r| [r.max_abs_a, r.h, 1.0 / r.h, r.int_h2, 1.0 / r.int_h2])
        .fold(0.0, f64::max);
    let area0 = series.records.first().map_or(f64::NAN, |r| r.area);
    decay_bound_from(series.dimension.max(1), lambda, area0)
}

pub(crate) fn decay_bound_from(n: usize, lambda: f64, area0: f64) -> f64 {
    1.0 / (4.0 * n as f64 * lambda * lambda * area0)
}

/// Earliest snapshot time after which `min H > 0` at every snapshot.
pub fn mean_convexity_onset(series: &TimeSeries) -> Option<f64> {
    let last_bad = series.records.iter().rposition(|r| !(r.min_h > 0.0));
    match last_bad {
        None => series.records.first().map(|r| r.t),
        Some(i) => series.records.get(i + 1).map(|r| r.t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_ellipsoid, gen_icosphere, Vec3};
    use std::f64::consts::PI;

    fn snapshot(mesh: crate::TriMesh) -> (DiagnosticsRecord, GeometryCache) {
        let state = FlowState::new(mesh).unwrap();
        let cache = GeometryCache::compute(&state.mesh).unwrap();
        (
            record_snapshot(&state, &cache, &FlowConfig::default(), 1.0),
            cache,
        )
    }

    #[test]
    fn sphere_record() {
        let (r, c) = snapshot(gen_icosphere(1.0, Vec3::zeros(), 3));
        assert!((r.h - 0.5).abs() < 1e-3);
        assert!(r.sup_one_minus_hh < 1e-3);
        assert!(r.max_traceless < 1e-9);
        assert!(r.is_finite());
        // Exact suprema of the cached fields.
        assert_eq!(
            r.max_grad_h,
            c.grad_h_norm.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        );
        assert_eq!(r.area_scale_applied, 1.0);
    }

    #[test]
    fn elongated_ellipsoid_record() {
        let (r, _) = snapshot(gen_ellipsoid(1.0, 1.0, 2.0, 3));
        assert!(r.min_h < r.max_h);
        assert!(r.int_traceless_sq > 0.0);
        assert!(r.is_finite());
        assert!(first_variation_residual(&r) < 1e-12);
        // Cauchy–Schwarz: |M| ≥ (∫H)²/∫H².
        assert!(r.area - r.int_h * r.int_h / r.int_h2 >= -1e-10);
    }

    #[test]
    fn row_round_trip() {
        let (r, _) = snapshot(gen_ellipsoid(1.2, 1.0, 0.85, 2));
        assert_eq!(DiagnosticsRecord::from_row(r.to_row()), r);
        assert_eq!(r.field("int_traceless_sq"), Some(r.int_traceless_sq));
        assert_eq!(r.field("nope"), None);
    }

    fn sphere_series(int_h2: f64, max_a: f64) -> TimeSeries {
        let mut s = TimeSeries::new(2);
        let r = DiagnosticsRecord::from_row([0.0; 17]);
        s.records.push(DiagnosticsRecord {
            area: 4.0 * PI,
            h: 0.5,
            int_h2,
            max_abs_a: max_a,
            ..r
        });
        s
    }

    #[test]
    fn decay_bound_on_unit_sphere() {
        let d = paper_decay_bound(&sphere_series(16.0 * PI, 2f64.sqrt()));
        let expect = 1.0 / (8.0 * (16.0 * PI).powi(2) * 4.0 * PI);
        assert!((d / expect - 1.0).abs() < 1e-14);
        assert!((d - 3.94e-6).abs() < 0.01e-6, "{d}");
        let d2 = paper_decay_bound(&sphere_series(32.0 * PI, 2f64.sqrt()));
        assert!((d2 / d - 0.25).abs() < 1e-14);
    }

    #[test]
    fn convexity_onset() {
        let mut s = TimeSeries::new(2);
        let base = DiagnosticsRecord::from_row([0.0; 17]);
        for (t, m) in [(0.0, -1.0), (0.1, -0.2), (0.2, 0.3), (0.3, 0.5)] {
            s.records.push(DiagnosticsRecord { t, min_h: m, ..base });
        }
        assert_eq!(mean_convexity_onset(&s), Some(0.2));
        s.records[0].min_h = 1.0;
        s.records[1].min_h = 1.0;
        assert_eq!(mean_convexity_onset(&s), Some(0.0));
        s.records[3].min_h = -1.0;
        assert_eq!(mean_convexity_onset(&s), None);
        assert_eq!(mean_convexity_onset(&TimeSeries::new(2)), None);
    }

    #[test]
    fn ode_terms_vanish_on_sphere() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 3);
        let state = FlowState::new(m).unwrap();
        let c = GeometryCache::compute(&state.mesh).unwrap();
        let o = ode_terms(0.0, state.h, &c);
        assert!(o.dh_dt.abs() < 1e-3, "{o:?}");
        assert!(o.d_int_h2_dt.abs() < 1e-2, "{o:?}");
    }
}
