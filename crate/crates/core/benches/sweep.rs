use criterion::{criterion_group, criterion_main, Criterion};
use regfield::electron::comparison_report;
use regfield::embedding::TwoScale;
use regfield::exec::Execution;
use regfield::fields::ElectronParams;
use regfield::quadrature::{QuadratureSpec, SphereGrid};
use regfield::regularizers::Regularizer;
use std::hint::black_box;

fn sweep(c: &mut Criterion) {
    let p = ElectronParams::default();
    let spec = QuadratureSpec::default();
    let grid = SphereGrid::product(SphereGrid::DEFAULT_ORDER);
    let kernels = vec![
        Regularizer::gaussian(1.0).unwrap(),
        Regularizer::compact_bump().unwrap(),
        Regularizer::asymmetric_bump(0.3).unwrap(),
    ];
    let scales: Vec<TwoScale> = [0.05, 0.1, 0.2]
        .iter()
        .flat_map(|&a| [1e-2, 3e-3, 1e-3].map(move |k| TwoScale::new(a, a * k).unwrap()))
        .collect();

    let mut g = c.benchmark_group("comparison_report_27_points");
    g.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_function(name, |b| {
            b.iter(|| comparison_report(&p, black_box(&scales), &kernels, &spec, &grid, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
