use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use maxprod_bench::{parabola_operator, unit_grid};

fn evaluate(c: &mut Criterion) {
    let xs = unit_grid(1025);
    let mut group = c.benchmark_group("evaluate_grid");
    for n in [16u32, 128, 1024] {
        let op = parabola_operator("logistic", n);
        group.bench_with_input(BenchmarkId::new("fast", n), &op, |b, op| {
            b.iter(|| xs.iter().map(|&x| op.evaluate_fast(black_box(x)).unwrap()).sum::<f64>())
        });
        group.bench_with_input(BenchmarkId::new("full_scan", n), &op, |b, op| {
            b.iter(|| xs.iter().map(|&x| op.evaluate(black_box(x)).unwrap()).sum::<f64>())
        });
    }
    group.finish();
}

fn construct(c: &mut Criterion) {
    let mut group = c.benchmark_group("construct");
    for n in [16u32, 256] {
        group.bench_function(BenchmarkId::new("ramp", n), |b| b.iter(|| parabola_operator("ramp", black_box(n))));
    }
    group.finish();
}

criterion_group!(benches, evaluate, construct);
criterion_main!(benches);
