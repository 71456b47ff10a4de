use criterion::{black_box, criterion_group, criterion_main, Criterion};
use sbc_core::blockmap::BlockMap;
use sbc_core::normal_form::normal_form_report;
use sbc_core::{BlockMapConfig, MassParams, NumericChart};

fn exact_normal_form(c: &mut Criterion) {
    let m = MassParams::equal();
    let mut g = c.benchmark_group("normal_form");
    g.sample_size(10);
    g.bench_function("exact_degree_9", |b| b.iter(|| normal_form_report(black_box(&m), 9).unwrap()));
    g.finish();
}

fn chart(c: &mut Criterion) {
    let m = MassParams::new(1.0, 2.0, 3.0, 4.0).unwrap();
    let base = BlockMapConfig::default().base();
    let mut g = c.benchmark_group("chart");
    g.sample_size(10);
    g.bench_function("degree_11", |b| b.iter(|| NumericChart::new(black_box(&m), base, 11).unwrap()));
    g.finish();
}

fn block_map_row(c: &mut Criterion) {
    let bm = BlockMap::new(BlockMapConfig::default()).unwrap();
    let mut g = c.benchmark_group("block_map");
    for s in [1e-3, 1e-2] {
        g.bench_function(format!("row_s_{s:e}"), |b| b.iter(|| bm.row(black_box(s)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, exact_normal_form, chart, block_map_row);
criterion_main!(benches);
