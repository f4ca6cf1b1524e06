use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use termreveal::dot::dot_product_terms;
use termreveal::quant::QuantScheme;
use termreveal::reveal::receding_water_select;
use termreveal::sdr::{binary_expand, hese_encode};
use termreveal::systolic::simulate_matmul;
use termreveal::{ArrayConfig, CoefficientVector, ControlRegisters, QuantizedMatrix, TermGroup};

fn values(n: usize, lo: i64, seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..=127)).collect()
}

fn hese(c: &mut Criterion) {
    let v = values(1024, -127, 1);
    c.bench_function("hese_encode_1024", |b| {
        b.iter(|| {
            for &x in &v {
                black_box(hese_encode(black_box(x), 8).unwrap());
            }
        })
    });
}

fn reveal(c: &mut Criterion) {
    let groups: Vec<TermGroup> = values(1024, -127, 2)
        .chunks(8)
        .map(|c| TermGroup::new(c.iter().map(|&v| hese_encode(v, 8).unwrap()).collect()))
        .collect();
    c.bench_function("receding_water_g8_k12_x128", |b| {
        b.iter(|| {
            for g in &groups {
                black_box(receding_water_select(g, 12).unwrap());
            }
        })
    });
}

fn dot(c: &mut Criterion) {
    let w = TermGroup::new(values(8, -127, 3).iter().map(|&v| hese_encode(v, 8).unwrap()).collect());
    let x: Vec<_> = values(8, 0, 4).iter().map(|&v| binary_expand(v).unwrap()).collect();
    c.bench_function("dot_product_terms_g8", |b| {
        b.iter(|| black_box(dot_product_terms(&w, &x, CoefficientVector::new()).unwrap()))
    });
}

fn simulate(c: &mut Criterion) {
    let scheme = QuantScheme::new(8, -7).unwrap();
    let to_i32 = |v: Vec<i64>| v.into_iter().map(|x| x as i32).collect::<Vec<_>>();
    let w = QuantizedMatrix::new(32, 64, to_i32(values(32 * 64, -127, 5)), scheme).unwrap();
    let x = QuantizedMatrix::new(64, 16, to_i32(values(64 * 16, 0, 6)), scheme).unwrap();
    let tmac = ArrayConfig::tmac(8, 8, ControlRegisters::tr(8, 8, 12, 3).unwrap()).unwrap();
    let pmac = ArrayConfig::pmac(8, 8, 8, 8).unwrap();
    c.bench_function("simulate_tmac_32x64x16", |b| {
        b.iter(|| black_box(simulate_matmul(&w, &x, &tmac).unwrap()))
    });
    c.bench_function("simulate_pmac_32x64x16", |b| {
        b.iter(|| black_box(simulate_matmul(&w, &x, &pmac).unwrap()))
    });
}

criterion_group!(benches, hese, reveal, dot, simulate);
criterion_main!(benches);
