use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cdqs_bench::{dictators, noisy_identity};
use cdqs_core::blocks::BlockChannel;
use cdqs_core::channel::identity_channel;
use cdqs_core::protocol::{certify_correctness, verify_cdqs, verify_cds_exact, CertifyOptions, VerifyOptions};
use cdqs_core::sdp::{diamond_norm_channels, optimal_decoder};
use cdqs_core::transforms::{and_compose, or_compose};
use cdqs_core::zoo::{cds_equality, cds_inner_product, lifted_equality};

fn diamond(c: &mut Criterion) {
    let mut g = c.benchmark_group("diamond_norm");
    for d in [2, 3, 4] {
        let noisy = noisy_identity(0.05, d).unwrap();
        let id = identity_channel(d);
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| diamond_norm_channels(black_box(&noisy), &id).unwrap())
        });
    }
    g.finish();
}

fn exact_cds(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify_cds_exact");
    for n in [2, 3] {
        let eq = cds_equality(n).unwrap();
        let ip = cds_inner_product(n).unwrap();
        g.bench_with_input(BenchmarkId::new("eq", n), &n, |b, _| b.iter(|| verify_cds_exact(black_box(&eq)).unwrap()));
        g.bench_with_input(BenchmarkId::new("ip", n), &n, |b, _| b.iter(|| verify_cds_exact(black_box(&ip)).unwrap()));
    }
    g.finish();
}

fn lifted(c: &mut Criterion) {
    let p = lifted_equality(1).unwrap();
    let n = p.combined(0, 0).unwrap();
    let mut g = c.benchmark_group("lifted_equality_n1");
    g.sample_size(20);
    g.bench_function("combine", |b| b.iter(|| p.combined(black_box(1), 1).unwrap()));
    g.bench_function("optimal_decoder", |b| b.iter(|| optimal_decoder(black_box(&n)).unwrap()));
    g.bench_function("certify_row", |b| {
        b.iter(|| certify_correctness(black_box(&n), &identity_channel(p.d_q), &CertifyOptions::default()).unwrap())
    });
    g.bench_function("verify", |b| b.iter(|| verify_cdqs(black_box(&p), &VerifyOptions::default()).unwrap()));
    g.finish();
}

fn composition(c: &mut Criterion) {
    let mut g = c.benchmark_group("composition");
    g.sample_size(10);
    let (a, b2) = dictators(false, 0.02).unwrap();
    g.bench_function("and_build", |b| b.iter(|| and_compose(black_box(&a), &b2).unwrap()));
    let (a, b3) = dictators(true, 0.02).unwrap();
    let or = or_compose(&a, &b3).unwrap();
    let row: BlockChannel = or.combined(0, 1).unwrap();
    g.bench_function("or_decoder_row", |b| b.iter(|| optimal_decoder(black_box(&row)).unwrap()));
    g.finish();
}

criterion_group!(benches, diamond, exact_cds, lifted, composition);
criterion_main!(benches);
