use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sapflow::diagnostics::best_fit_sphere;
use sapflow::flow::{advance, compute_h, select_timestep, FlowConfig, FlowState, Stepping};
use sapflow::mesh::gen_ellipsoid;
use sapflow::GeometryCache;

fn geometry(c: &mut Criterion) {
    let mut g = c.benchmark_group("geometry_cache");
    for subdiv in [3, 4] {
        let mesh = gen_ellipsoid(1.2, 1.0, 0.85, subdiv);
        g.bench_with_input(BenchmarkId::from_parameter(subdiv), &mesh, |b, m| {
            b.iter(|| GeometryCache::compute(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow_step");
    let state = FlowState::new(gen_ellipsoid(1.2, 1.0, 0.85, 3)).unwrap();
    let cache = GeometryCache::compute(&state.mesh).unwrap();
    let h = compute_h(&cache).unwrap();
    for (name, stepping) in [
        ("explicit", Stepping::Explicit),
        ("semi_implicit", Stepping::SemiImplicit),
    ] {
        let config = FlowConfig {
            stepping,
            ..FlowConfig::default()
        };
        let dt = select_timestep(&state.mesh, &cache, h, &config).unwrap();
        g.bench_function(name, |b| {
            b.iter(|| advance(black_box(&state), &cache, dt, &config).unwrap())
        });
    }
    g.finish();
}

fn sphere_fit(c: &mut Criterion) {
    let mesh = gen_ellipsoid(1.0, 1.0, 0.99, 4);
    c.bench_function("best_fit_sphere", |b| {
        b.iter(|| best_fit_sphere(black_box(&mesh)).unwrap())
    });
}

criterion_group!(benches, geometry, step, sphere_fit);
criterion_main!(benches);
