use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use heatcont_core::{
    global_minimize, make_builtin, newton_polish, psi_profile, smooth_eval, Params, QuadratureSpec, SearchWindow,
    TraceConfig,
};

fn builtin(name: &str) -> heatcont_core::SeparableObjective {
    make_builtin(name, &Params::new()).unwrap()
}

fn smoothing(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let mut g = c.benchmark_group("smooth_eval");
    for (name, t) in [
        ("abs", 1e-2),
        ("multi_valley", 0.1),
        ("nonsmooth_quadratic", 1e-3),
        ("nonsmooth_linear", 1e-4),
    ] {
        let f = builtin(name);
        g.bench_function(format!("{name}/t={t}"), |b| {
            b.iter(|| smooth_eval(&f, black_box(t), black_box(&[0.013]), 3, &spec).unwrap())
        });
    }
    g.finish();
}

fn profile(c: &mut Criterion) {
    c.bench_function("psi_profile/a=1.5", |b| {
        b.iter(|| psi_profile(1.5, black_box(0.7), 3).unwrap())
    });
}

fn newton(c: &mut Criterion) {
    let f = builtin("asymmetric_cusp");
    let cfg = TraceConfig::default();
    c.bench_function("newton_polish/asymmetric_cusp", |b| {
        b.iter(|| newton_polish(&f, black_box(1e-2), &[0.05], &cfg).unwrap())
    });
}

fn minimize(c: &mut Criterion) {
    let f = builtin("multi_valley");
    let cfg = TraceConfig::default();
    let mut g = c.benchmark_group("global_minimize");
    g.sample_size(10);
    g.bench_function("multi_valley/t=0.15", |b| {
        b.iter(|| global_minimize(&f, black_box(0.15), &SearchWindow::default(), &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, smoothing, profile, newton, minimize);
criterion_main!(benches);
