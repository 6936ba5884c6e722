use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rdcert::dynamics::{random_states, simulate_network, simulate_pde, PdeGrid, SimOptions};
use rdcert::envelope::{FhnParams, FitzHughNagumo, Goodwin, GoodwinParams};
use rdcert::spectral::Graph;
use rdcert::Mat;

fn pde(c: &mut Criterion) {
    let model = Goodwin::new(GoodwinParams::reference()).unwrap();
    let d = Mat::identity(3);
    let mut group = c.benchmark_group("goodwin_pde");
    group.sample_size(10);
    for workers in [1, 4] {
        let grid = PdeGrid::cosine(11.0, 256, &[90.0, 90.0, 9.0], &[9.0, 9.0, 0.9], 1).unwrap();
        let opts = SimOptions { t_end: 20.0, dt: Some(0.05), workers, ..SimOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(workers), &opts, |b, opts| {
            b.iter(|| simulate_pde(&model, &d, &grid, opts).unwrap())
        });
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let model = FitzHughNagumo::new(FhnParams { a: 0.0, b: 1.0, c: 2.0 }).unwrap();
    let d = Mat::from_diag(&[3.0, 1.0]);
    let g = Graph::path(32);
    let init = random_states(32, &[-2.0, -2.0], &[2.0, 2.0], 1).unwrap();
    let opts = SimOptions { t_end: 10.0, dt: Some(0.005), ..SimOptions::default() };
    c.bench_function("fhn_path32", |b| b.iter(|| simulate_network(&model, &d, &g, &init, &opts).unwrap()));
}

criterion_group!(benches, pde, network);
criterion_main!(benches);
