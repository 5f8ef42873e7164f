use std::f64::consts::PI;

use approx::assert_relative_eq;
use sapflow::diagnostics::best_fit_sphere;
use sapflow::flow::{run_flow, FlowConfig, Stepping, Termination};
use sapflow::mesh::{gen_ellipsoid, TriMesh};

#[test]
fn explicit_and_semi_implicit_reach_the_same_sphere() {
    let mesh = gen_ellipsoid(1.2, 1.0, 0.85, 2);
    let explicit = run_flow(mesh.clone(), &FlowConfig::default()).unwrap();
    let semi = run_flow(
        mesh,
        &FlowConfig {
            stepping: Stepping::SemiImplicit,
            ..FlowConfig::default()
        },
    )
    .unwrap();
    assert_eq!(explicit.termination, Termination::Converged);
    assert_eq!(semi.termination, Termination::Converged);
    let r1 = best_fit_sphere(&explicit.final_state.mesh).unwrap().radius;
    let r2 = best_fit_sphere(&semi.final_state.mesh).unwrap().radius;
    assert_relative_eq!(r1, r2, max_relative = 5e-3);
    // Larger steps, fewer of them.
    assert!(
        semi.steps < explicit.steps,
        "{} vs {}",
        semi.steps,
        explicit.steps
    );
    for w in semi.series.records.windows(2) {
        assert!(w[1].volume >= w[0].volume * (1.0 - 1e-8));
    }
}

#[test]
fn records_satisfy_cauchy_schwarz_and_stay_finite() {
    let run = run_flow(gen_ellipsoid(1.5, 1.0, 0.7, 2), &FlowConfig::default()).unwrap();
    for r in &run.series.records {
        assert!(r.is_finite());
        // Cauchy–Schwarz: (∫H)² ≤ |M| ∫H².
        assert!(r.int_h * r.int_h <= r.area * r.int_h2 * (1.0 + 1e-12));
        assert!(r.h > 0.0);
    }
    // The mean curvature range closes in on a constant.
    let last = run.series.records.last().unwrap();
    assert!(last.max_h - last.min_h < 0.05 * last.max_h);
}

#[test]
fn ellipse_curve_rounds_out_with_fixed_length() {
    let n = 128;
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let s = 2.0 * PI * i as f64 / n as f64;
            [1.6 * s.cos(), 0.8 * s.sin()]
        })
        .collect();
    let curve = TriMesh::curve(pts).unwrap();
    let run = run_flow(
        curve,
        &FlowConfig {
            t_max: 20.0,
            ..FlowConfig::default()
        },
    )
    .unwrap();
    let r = &run.series.records;
    let (first, last) = (&r[0], r.last().unwrap());
    assert_eq!(run.termination, Termination::Converged, "t = {}", last.t);
    assert_relative_eq!(last.area, first.area, max_relative = 1e-11);
    // Enclosed area grows toward the isoperimetric optimum L²/4π.
    assert!(last.volume > first.volume);
    assert_relative_eq!(
        last.volume,
        first.area * first.area / (4.0 * PI),
        max_relative = 2e-3
    );
}

#[test]
fn blow_up_is_reported_not_raised() {
    let run = run_flow(
        gen_ellipsoid(1.2, 1.0, 0.85, 2),
        &FlowConfig {
            blowup_max_a: Some(1.0),
            ..FlowConfig::default()
        },
    )
    .unwrap();
    assert!(run.termination.is_blow_up());
    assert_eq!(run.series.records.len(), 1);
}
