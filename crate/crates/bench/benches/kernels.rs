use criterion::{black_box, criterion_group, criterion_main, Criterion};
use indefspec::critical::WeightFunction;
use indefspec::eigen::{Region, K_MAX};
use indefspec::roots::Rect;
use indefspec::{PotentialSpec, Side, C64};
use indefspec_bench::{even_odd, triple_zero, zone};

fn weyl_eval(c: &mut Criterion) {
    let pair = even_odd(4.0);
    let l = C64::new(0.3, 0.7);
    c.bench_function("phi_eval", |b| b.iter(|| pair.phi.eval(black_box(l)).unwrap()));
    c.bench_function("weyl_deriv_3", |b| b.iter(|| pair.plus().deriv(black_box(l), 3).unwrap()));
}

fn classify(c: &mut Criterion) {
    let pair = triple_zero();
    c.bench_function("classify_triple_zero", |b| b.iter(|| pair.classify_eigenvalue(black_box(C64::new(0.0, 0.0)), K_MAX).unwrap()));
}

fn spectrum(c: &mut Criterion) {
    let pair = even_odd(1.0);
    let rect = Rect::new(0.05, 0.95, -2.0, 2.0);
    let mut g = c.benchmark_group("spectrum");
    g.sample_size(10);
    g.bench_function("rect_complex_roots", |b| b.iter(|| pair.discrete_spectrum(Region::Rect(rect), K_MAX).unwrap()));
    let pair = even_odd(4.0);
    g.bench_function("interval_real_roots", |b| b.iter(|| pair.discrete_spectrum(Region::Interval(0.0, 1.0), K_MAX).unwrap()));
    g.finish();
}

fn infzone(c: &mut Criterion) {
    let z = zone(64);
    let l = C64::new(3.1, 0.2);
    c.bench_function("zone_m_64_gaps", |b| b.iter(|| z.m_coefficient(black_box(l), Side::Plus).unwrap()));
}

fn sturm(c: &mut Criterion) {
    let q = PotentialSpec::critical_example();
    let mut g = c.benchmark_group("sturm");
    g.sample_size(10);
    g.bench_function("m_numeric_critical", |b| b.iter(|| q.m_numeric(Side::Plus, black_box(C64::new(1.0, 1.0)), 1e-10).unwrap()));
    g.finish();
}

fn critical(c: &mut Criterion) {
    let w = WeightFunction::power(-1.5);
    let mut g = c.benchmark_group("critical");
    g.sample_size(10);
    g.bench_function("verdict_alpha_1.5", |b| b.iter(|| w.critical_verdict().unwrap()));
    g.finish();
}

criterion_group!(benches, weyl_eval, classify, spectrum, infzone, sturm, critical);
criterion_main!(benches);
