use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jlalg::exec::ExecMode;
use jlalg::expr::Expr;
use jlalg::opalg::catalog;
use jlalg::opalg::verify::{self, SuiteOptions};
use jlalg::oracle::{self, TestConfig};
use jlalg::radial::{self, GridConfig};

const MODES: [(&str, ExecMode); 2] = [("parallel", ExecMode::Parallel), ("sequential", ExecMode::Sequential)];

fn oracle_points(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_a2_commutator");
    g.sample_size(10);
    let cfg = TestConfig::sampled(32, 1);
    let e = Expr::commutator(Expr::name("A2"), Expr::name("H"));
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| oracle::identity_residual(&e, &catalog::definition, &cfg, mode).unwrap())
        });
    }
    g.finish();
}

fn spectrum_sectors(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectrum_12_sectors");
    g.sample_size(10);
    let grid = GridConfig { nodes: 1000, tolerance: 1e-6, ..GridConfig::default() };
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| radial::spectrum(&[0.01, 0.0729735, 0.3], &[1, 2], 3, &grid, mode).unwrap())
        });
    }
    g.finish();
}

fn symbolic_suite(c: &mut Criterion) {
    let mut g = c.benchmark_group("symbolic_suite");
    g.sample_size(10);
    for (name, mode) in MODES {
        let opts = SuiteOptions { exec: mode, ..SuiteOptions::symbolic_only() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| b.iter(|| verify::run_suite(&[], opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, symbolic_suite, spectrum_sectors, oracle_points);
criterion_main!(benches);
