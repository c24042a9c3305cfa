use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fiberweave::lattice::{FabricStyle, Laminate, LatticeModel, TraceLayout};
use fiberweave::par::Parallelism;
use fiberweave::stats::{deviation_series, InterpolatedProfile, ProfileKind};
use fiberweave::sweep::{offset_range, SweepConfig, Sweeper};

const MODES: [(&str, Parallelism); 2] = [("parallel", Parallelism::Parallel), ("sequential", Parallelism::Sequential)];

fn monte_carlo(c: &mut Criterion) {
    let l = 14.0;
    let xs: Vec<f64> = (0..56).map(|i| i as f64 * l / 56.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 150.0 + 3.0 * (2.0 * PI * x / l).sin()).collect();
    let spline = InterpolatedProfile::new("sine", &xs, &ys, l).unwrap();
    let mut g = c.benchmark_group("deviation_sample_1e5");
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| deviation_series(&spline, ProfileKind::Delay, 100_000, black_box(1), mode).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let style = FabricStyle::builtin().remove(0);
    let model = LatticeModel::new(style, Laminate::default()).unwrap();
    let mut g = c.benchmark_group("single_sweep_1035");
    g.sample_size(10);
    for (name, mode) in MODES {
        let cfg = SweepConfig {
            offsets: offset_range(-6.0, 6.0, 2.0).unwrap(),
            n_slices: 4,
            parallelism: mode,
            ..SweepConfig::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            // A fresh sweeper each time so the raster memo starts empty.
            b.iter(|| {
                let sw = Sweeper::new(model.clone(), cfg.clone()).unwrap();
                sw.run_single_sweep(&TraceLayout::single(4.0)).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, sweep);
criterion_main!(benches);
