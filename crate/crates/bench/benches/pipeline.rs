use std::hint::black_box;

use backscatter_core::impedance::optimize_matching;
use backscatter_core::impedance::{ElementKind, LogGrid, MatchingSearch};
use backscatter_core::modem::{LoraParams, ProtocolConfig};
use backscatter_core::tag::compile_bias;
use backscatter_core::TagModel;
use criterion::{criterion_group, criterion_main, Criterion};

fn payload(n: usize) -> Vec<u8> {
    (0..n).map(|i| ((i * 7 + i / 3) % 2) as u8).collect()
}

fn lora_demod(c: &mut Criterion) {
    let p = ProtocolConfig::Lora(LoraParams::new(9, 125e3));
    let tx = p.modulate(&payload(9 * 64)).unwrap();
    c.bench_function("lora_sf9_demod_64_symbols", |b| {
        b.iter(|| p.demodulate(black_box(&tx)).unwrap())
    });
}

fn bias_compile(c: &mut Criterion) {
    let tag = TagModel::default();
    let space = tag.modulation_space(4096).unwrap();
    let target = ProtocolConfig::Zigbee(Default::default())
        .modulate(&payload(640))
        .unwrap();
    c.bench_function("compile_bias_zigbee_640_bits", |b| {
        b.iter(|| compile_bias(&tag, black_box(&target), &space).unwrap())
    });
}

fn matching_search(c: &mut Criterion) {
    let tag = TagModel::default();
    let search = MatchingSearch {
        topologies: vec![vec![ElementKind::SeriesInductor, ElementKind::ShuntCapacitor]],
        inductors: LogGrid {
            min: 0.1e-9,
            max: 100e-9,
            points: 20,
        },
        capacitors: LogGrid {
            min: 0.05e-12,
            max: 50e-12,
            points: 20,
        },
        boundary_samples: 512,
        ..MatchingSearch::default()
    };
    c.bench_function("optimize_matching_lc_20x20", |b| {
        b.iter(|| optimize_matching(&tag.curve, &tag.config, black_box(&search)).unwrap())
    });
}

criterion_group!(benches, lora_demod, bias_compile, matching_search);
criterion_main!(benches);
