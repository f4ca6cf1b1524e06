use termreveal::analysis::{generate_synthetic, grouped_term_matmul, reveal_weights, Distribution, TrConfig};
use termreveal::io::{read_matrix, read_quantized, write_matrix, write_quantized};
use termreveal::quant::{dequantize, mean_abs_quant_error, quantize};
use termreveal::Encoding;

#[test]
fn quantized_csv_reproduces_downstream_results() {
    let dir = tempfile::tempdir().unwrap();
    let w = quantize(&generate_synthetic(Distribution::Normal, 12, 40, 0.1, 1).unwrap(), 8).unwrap();
    let x = quantize(&generate_synthetic(Distribution::HalfNormal, 40, 3, 1.0, 2).unwrap(), 6).unwrap();
    let (wp, xp) = (dir.path().join("w.csv"), dir.path().join("x.csv"));
    write_quantized(&wp, &w).unwrap();
    write_quantized(&xp, &x).unwrap();
    let (w2, x2) = (read_quantized(&wp).unwrap(), read_quantized(&xp).unwrap());
    assert_eq!(w2, w);
    assert_eq!(x2, x);

    let cfg = TrConfig { group_size: 8, budget: 12, data_terms: 3, encoding: Encoding::Hese };
    let a = reveal_weights(&w, &cfg).unwrap();
    let b = reveal_weights(&w2, &cfg).unwrap();
    assert_eq!((a.values, a.sigmas, a.pruned_terms), (b.values, b.sigmas, b.pruned_terms));
    let p = grouped_term_matmul(&w, &x, 8, Some(12), Some(3), Encoding::Hese).unwrap();
    let q = grouped_term_matmul(&w2, &x2, 8, Some(12), Some(3), Encoding::Hese).unwrap();
    assert_eq!(p.output, q.output);
    assert_eq!(p.pair_histogram, q.pair_histogram);
}

#[test]
fn dequantized_csv_requantizes_identically() {
    let dir = tempfile::tempdir().unwrap();
    let q = quantize(&generate_synthetic(Distribution::Uniform, 9, 9, 3.0, 5).unwrap(), 5).unwrap();
    let path = dir.path().join("d.csv");
    write_matrix(&path, &dequantize(&q)).unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!(quantize(&back, 5).unwrap(), q);
    assert_eq!(mean_abs_quant_error(&back, &q).unwrap(), 0.0);
}

#[test]
fn lower_bitwidth_has_larger_error() {
    let mut worse = 0;
    for seed in 0..1000 {
        let m = generate_synthetic(Distribution::Normal, 8, 8, 1.0, seed).unwrap();
        let e6 = mean_abs_quant_error(&m, &quantize(&m, 6).unwrap()).unwrap();
        let e8 = mean_abs_quant_error(&m, &quantize(&m, 8).unwrap()).unwrap();
        assert!(e6 >= e8, "seed {seed}: {e6} < {e8}");
        worse += (e6 > e8) as usize;
    }
    assert!(worse > 990);
}
