use criterion::{black_box, criterion_group, criterion_main, Criterion};

use maxprod_core::function::corpus;
use maxprod_core::orlicz::{modular, PhiFunction};
use maxprod_core::quadrature::CompositeGrid;
use maxprod_core::{integrate, IntegrationRequest};

fn adaptive(c: &mut Criterion) {
    let f = |x: f64| (x - 0.3).abs().sqrt();
    c.bench_function("adaptive_kink", |b| {
        b.iter(|| integrate(&IntegrationRequest::new(&f, 0.0, 1.0).breakpoints([0.3]).tolerance(1e-10)).unwrap())
    });
}

fn composite(c: &mut Criterion) {
    let grid = CompositeGrid::new(0.0, 1.0, 4096, &[0.5], 5).unwrap();
    c.bench_function("composite_4096", |b| b.iter(|| grid.integrate(|x| black_box(x).sin())));
}

fn modular_families(c: &mut Criterion) {
    let f = corpus::kink();
    for name in ["power(p=2)", "zygmund(alpha=1,beta=1)", "exponential(gamma=1)"] {
        let phi = PhiFunction::parse(name).unwrap();
        c.bench_function(&format!("modular/{name}"), |b| b.iter(|| modular(&phi, &f, black_box(4.0)).unwrap()));
    }
}

criterion_group!(benches, adaptive, composite, modular_families);
criterion_main!(benches);
