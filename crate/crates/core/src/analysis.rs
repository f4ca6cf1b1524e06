//! End-to-end analyses: synthetic matrices, float/QT/TR forward passes over
//! a stack of matrix layers, parameter sweeps and histogram tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, Uniform};
use serde::Serialize;

use crate::dot::{count_term_pairs, dot_product_terms, CoefficientVector};
use crate::error::{Error, Result};
use crate::quant::{dequantize, integer_matmul, mean_abs_quant_error, quantize, IntMatrix, Matrix, QuantizedMatrix};
use crate::reveal::{
    partition_into_groups_analytics, receding_water_select, reveal_row, truncate_data_terms,
    GroupBudget, TermGroup,
};
use crate::sdr::{encode, term_count_histogram, Encoding, TermExpansion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Normal,
    HalfNormal,
    Uniform,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Distribution::Normal),
            "half_normal" | "half-normal" => Ok(Distribution::HalfNormal),
            "uniform" => Ok(Distribution::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown distribution '{other}'"))),
        }
    }
}

/// Seeded random matrix. `uniform` draws from `[-sigma, sigma]`;
/// `half_normal` is `|N(0, sigma)|`.
pub fn generate_synthetic(
    dist: Distribution,
    rows: usize,
    cols: usize,
    sigma: f64,
    seed: u64,
) -> Result<Matrix> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma {sigma}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let data: Vec<f64> = match dist {
        Distribution::Normal | Distribution::HalfNormal => {
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let fold = dist == Distribution::HalfNormal;
            (0..n)
                .map(|_| {
                    let v = normal.sample(&mut rng);
                    if fold {
                        v.abs()
                    } else {
                        v
                    }
                })
                .collect()
        }
        Distribution::Uniform => {
            let u = Uniform::new_inclusive(-sigma, sigma);
            (0..n).map(|_| u.sample(&mut rng)).collect()
        }
    };
    Matrix::new(rows, cols, data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

impl Activation {
    fn apply(self, m: Matrix) -> Matrix {
        match self {
            Activation::Relu => m.map(|v| v.max(0.0)),
            Activation::None => m,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "none" | "linear" => Ok(Activation::None),
            other => Err(Error::InvalidParameter(format!("unknown activation '{other}'"))),
        }
    }
}

/// A layer computes `act(W x)` with `W` of shape `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub activation: Activation,
}

/// Term revealing settings for weights plus data truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrConfig {
    pub group_size: usize,
    pub budget: usize,
    pub data_terms: usize,
    pub encoding: Encoding,
}

impl TrConfig {
    pub fn group_budget(&self) -> Result<GroupBudget> {
        GroupBudget::analytics(self.group_size, self.budget)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineSpec {
    pub layers: Vec<Layer>,
    pub qt_bitwidth: u32,
    pub tr: Option<TrConfig>,
}

impl PipelineSpec {
    pub fn validate(&self, input: &Matrix) -> Result<()> {
        let mut rows = input.rows();
        for layer in &self.layers {
            if layer.weights.cols() != rows {
                return Err(Error::ShapeMismatch {
                    expected: (layer.weights.rows(), rows),
                    actual: layer.weights.shape(),
                });
            }
            rows = layer.weights.rows();
        }
        if let Some(tr) = &self.tr {
            tr.group_budget()?;
            if tr.data_terms == 0 {
                return Err(Error::InvalidDataTerms(0));
            }
        }
        Ok(())
    }
}

fn relative_error(approx: &Matrix, reference: &Matrix) -> f64 {
    let (num, den) = approx
        .data()
        .iter()
        .zip(reference.data())
        .fold((0.0, 0.0), |(n, d), (a, r)| (n + (a - r) * (a - r), d + r * r));
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Σ_p (Σ_i terms(w_ip)) (Σ_j terms(x_pj)), the term pairs of a full matmul.
fn matmul_pair_count(w_terms: &[usize], x_terms: &[usize], m: usize, k: usize, n: usize) -> u64 {
    (0..k)
        .map(|p| {
            let wsum: u64 = (0..m).map(|i| w_terms[i * k + p] as u64).sum();
            let xsum: u64 = (0..n).map(|j| x_terms[p * n + j] as u64).sum();
            wsum * xsum
        })
        .sum()
}

fn forward_float(layers: &[Layer], input: &Matrix) -> Result<Vec<Matrix>> {
    let mut outs = Vec::with_capacity(layers.len());
    let mut x = input.clone();
    for layer in layers {
        x = layer.activation.apply(layer.weights.matmul(&x)?);
        outs.push(x.clone());
    }
    Ok(outs)
}

struct PassLayer {
    output: Matrix,
    weight_error: f64,
    pairs: u64,
    mean_sigma: f64,
}

fn int_values(q: &QuantizedMatrix) -> Vec<i64> {
    q.values().iter().map(|&v| v as i64).collect()
}

fn forward_qt(layers: &[Layer], input: &Matrix, bits: u32) -> Result<Vec<PassLayer>> {
    let mut out = Vec::with_capacity(layers.len());
    let mut x = input.clone();
    for layer in layers {
        let wq = quantize(&layer.weights, bits)?;
        let xq = quantize(&x, bits)?;
        let (m, k, n) = (wq.rows(), wq.cols(), xq.cols());
        let y = integer_matmul(&int_values(&wq), &int_values(&xq), m, k, n);
        let scale = wq.scheme().scale_exponent() + xq.scheme().scale_exponent();
        let pc = |q: &QuantizedMatrix| -> Vec<usize> {
            q.values().iter().map(|v| v.unsigned_abs().count_ones() as usize).collect()
        };
        let pairs = matmul_pair_count(&pc(&wq), &pc(&xq), m, k, n);
        x = layer.activation.apply(IntMatrix::new(m, n, y, scale)?.to_real());
        out.push(PassLayer {
            output: x.clone(),
            weight_error: mean_abs_quant_error(&layer.weights, &wq)?,
            pairs,
            mean_sigma: 0.0,
        });
    }
    Ok(out)
}

/// Weights after encoding and term revealing, row by row.
pub struct RevealedWeights {
    pub values: Vec<i64>,
    pub term_counts: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub pruned_terms: usize,
}

pub fn reveal_weights(wq: &QuantizedMatrix, tr: &TrConfig) -> Result<RevealedWeights> {
    let budget = tr.group_budget()?;
    let bits = wq.scheme().bitwidth();
    let mut out = RevealedWeights {
        values: Vec::with_capacity(wq.values().len()),
        term_counts: Vec::with_capacity(wq.values().len()),
        sigmas: Vec::new(),
        pruned_terms: 0,
    };
    for r in 0..wq.rows() {
        let row = reveal_row(wq.row(r), tr.encoding, bits, budget)?;
        out.values.extend(&row.values);
        out.term_counts.extend(row.expansions.iter().map(TermExpansion::len));
        out.sigmas.extend(&row.group_sigmas);
        out.pruned_terms += row.pruned_terms;
    }
    Ok(out)
}

/// Mean `|original - scale * revealed|` over all weights.
pub fn revealed_weight_error(original: &Matrix, revealed: &[i64], scale_exponent: i32) -> f64 {
    let scale = (scale_exponent as f64).exp2();
    original
        .data()
        .iter()
        .zip(revealed)
        .map(|(&w, &q)| (w - q as f64 * scale).abs())
        .sum::<f64>()
        / original.data().len() as f64
}

fn truncate_all(q: &QuantizedMatrix, encoding: Encoding, s: usize) -> Result<Vec<TermExpansion>> {
    let bits = q.scheme().bitwidth();
    q.values()
        .iter()
        .map(|&v| encode(v as i64, encoding, bits).map(|e| truncate_data_terms(&e, s)))
        .collect()
}

fn forward_tr(layers: &[Layer], input: &Matrix, bits: u32, tr: &TrConfig) -> Result<Vec<PassLayer>> {
    let mut out = Vec::with_capacity(layers.len());
    let mut x = input.clone();
    for layer in layers {
        let wq = quantize(&layer.weights, bits)?;
        let xq = quantize(&x, bits)?;
        let (m, k, n) = (wq.rows(), wq.cols(), xq.cols());
        let rw = reveal_weights(&wq, tr)?;
        let xt = truncate_all(&xq, tr.encoding, tr.data_terms)?;
        let xv: Vec<i64> = xt.iter().map(TermExpansion::value).collect();
        let xc: Vec<usize> = xt.iter().map(TermExpansion::len).collect();
        let y = integer_matmul(&rw.values, &xv, m, k, n);
        let scale = wq.scheme().scale_exponent() + xq.scheme().scale_exponent();
        let pairs = matmul_pair_count(&rw.term_counts, &xc, m, k, n);
        x = layer.activation.apply(IntMatrix::new(m, n, y, scale)?.to_real());
        let mean_sigma = if rw.sigmas.is_empty() {
            0.0
        } else {
            rw.sigmas.iter().sum::<f64>() / rw.sigmas.len() as f64
        };
        out.push(PassLayer {
            output: x.clone(),
            weight_error: revealed_weight_error(&layer.weights, &rw.values, wq.scheme().scale_exponent()),
            pairs,
            mean_sigma,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerComparison {
    pub layer: usize,
    pub weight_error_qt: f64,
    pub weight_error_tr: Option<f64>,
    pub output_rel_error_qt: f64,
    pub output_rel_error_tr: Option<f64>,
    pub pairs_per_sample_qt: f64,
    pub pairs_per_sample_tr: Option<f64>,
    pub mean_sigma_tr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub layers: Vec<LayerComparison>,
    pub output_rel_error_qt: f64,
    pub output_rel_error_tr: Option<f64>,
    pub pairs_per_sample_qt: f64,
    pub pairs_per_sample_tr: Option<f64>,
    /// QT pairs over TR pairs.
    pub pair_reduction: Option<f64>,
    /// Worst case at the QT bitwidth: `(b-1)^2` pairs per multiplication.
    pub pairs_per_sample_qt_worst_case: f64,
    #[serde(skip)]
    pub output_qt: Matrix,
    #[serde(skip)]
    pub output_tr: Option<Matrix>,
}

/// Run float, QT and (optionally) TR forward passes on `input`, whose
/// columns are samples.
pub fn compare_qt_tr(pipeline: &PipelineSpec, input: &Matrix) -> Result<ComparisonReport> {
    pipeline.validate(input)?;
    let batch = input.cols() as f64;
    let reference = forward_float(&pipeline.layers, input)?;
    let qt = forward_qt(&pipeline.layers, input, pipeline.qt_bitwidth)?;
    let tr = pipeline
        .tr
        .as_ref()
        .map(|cfg| forward_tr(&pipeline.layers, input, pipeline.qt_bitwidth, cfg))
        .transpose()?;

    let layers = (0..pipeline.layers.len())
        .map(|i| {
            let t = tr.as_ref().map(|t| &t[i]);
            LayerComparison {
                layer: i,
                weight_error_qt: qt[i].weight_error,
                weight_error_tr: t.map(|l| l.weight_error),
                output_rel_error_qt: relative_error(&qt[i].output, &reference[i]),
                output_rel_error_tr: t.map(|l| relative_error(&l.output, &reference[i])),
                pairs_per_sample_qt: qt[i].pairs as f64 / batch,
                pairs_per_sample_tr: t.map(|l| l.pairs as f64 / batch),
                mean_sigma_tr: t.map(|l| l.mean_sigma),
            }
        })
        .collect::<Vec<_>>();

    let pairs_qt: f64 = layers.iter().map(|l| l.pairs_per_sample_qt).sum();
    let pairs_tr = tr
        .as_ref()
        .map(|_| layers.iter().filter_map(|l| l.pairs_per_sample_tr).sum::<f64>());
    let per_mult = ((pipeline.qt_bitwidth - 1) * (pipeline.qt_bitwidth - 1)) as f64;
    let worst: f64 = pipeline
        .layers
        .iter()
        .map(|l| (l.weights.rows() * l.weights.cols()) as f64 * per_mult)
        .sum();
    let last = reference.len() - 1;
    Ok(ComparisonReport {
        output_rel_error_qt: layers[last].output_rel_error_qt,
        output_rel_error_tr: layers[last].output_rel_error_tr,
        pairs_per_sample_qt: pairs_qt,
        pairs_per_sample_tr: pairs_tr,
        pair_reduction: pairs_tr.filter(|&p| p > 0.0).map(|p| pairs_qt / p),
        pairs_per_sample_qt_worst_case: worst,
        output_qt: qt[last].output.clone(),
        output_tr: tr.as_ref().map(|t| t[last].output.clone()),
        layers,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub group_sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub data_terms: Vec<usize>,
    pub encodings: Vec<Encoding>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub group_size: usize,
    pub alpha: f64,
    pub budget: usize,
    pub data_terms: usize,
    pub encoding: Encoding,
    pub mean_sigma: f64,
    pub output_rel_error: f64,
    pub term_pairs_per_sample: f64,
}

pub const SWEEP_HEADER: [&str; 8] = [
    "g",
    "alpha",
    "k",
    "s",
    "encoding",
    "mean_sigma",
    "output_rel_error",
    "term_pairs",
];

impl SweepRow {
    pub fn to_fields(&self) -> Vec<String> {
        use crate::io::fmt_float;
        vec![
            self.group_size.to_string(),
            fmt_float(self.alpha),
            self.budget.to_string(),
            self.data_terms.to_string(),
            self.encoding.to_string(),
            fmt_float(self.mean_sigma),
            fmt_float(self.output_rel_error),
            fmt_float(self.term_pairs_per_sample),
        ]
    }
}

/// One row per `(g, alpha, s, encoding)` in that nesting order, with
/// `k = round(alpha * g)`.
pub fn sweep(layers: &[Layer], input: &Matrix, qt_bitwidth: u32, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let probe = PipelineSpec {
        layers: layers.to_vec(),
        qt_bitwidth,
        tr: None,
    };
    probe.validate(input)?;
    let reference = forward_float(layers, input)?;
    let last = reference.last().ok_or(Error::EmptyMatrix)?;
    let batch = input.cols() as f64;
    let mut rows = Vec::new();
    for &g in &spec.group_sizes {
        for &alpha in &spec.alphas {
            let budget = GroupBudget::from_alpha(g, alpha)?;
            for &s in &spec.data_terms {
                for &encoding in &spec.encodings {
                    let cfg = TrConfig {
                        group_size: g,
                        budget: budget.budget(),
                        data_terms: s,
                        encoding,
                    };
                    let pass = forward_tr(layers, input, qt_bitwidth, &cfg)?;
                    let mean_sigma =
                        pass.iter().map(|l| l.mean_sigma).sum::<f64>() / pass.len() as f64;
                    rows.push(SweepRow {
                        group_size: g,
                        alpha,
                        budget: budget.budget(),
                        data_terms: s,
                        encoding,
                        mean_sigma,
                        output_rel_error: relative_error(&pass[pass.len() - 1].output, last),
                        term_pairs_per_sample: pass.iter().map(|l| l.pairs as f64).sum::<f64>() / batch,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Term-count histograms of one matrix under every encoding.
pub fn term_histograms(m: &QuantizedMatrix) -> BTreeMap<Encoding, BTreeMap<usize, f64>> {
    Encoding::ALL
        .iter()
        .map(|&e| (e, term_count_histogram(m, e)))
        .collect()
}

/// Grouped matmul through the term-pair engine. Weights are revealed with
/// `tr` (when given) and data truncated to `data_terms`; returns the product
/// and a histogram of term pairs per group dot product.
pub struct GroupedProduct {
    pub output: IntMatrix,
    pub pair_histogram: BTreeMap<usize, usize>,
}

pub fn grouped_term_matmul(
    w: &QuantizedMatrix,
    x: &QuantizedMatrix,
    group_size: usize,
    budget: Option<usize>,
    data_terms: Option<usize>,
    encoding: Encoding,
) -> Result<GroupedProduct> {
    if w.cols() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: (w.cols(), x.cols()),
            actual: x.shape(),
        });
    }
    let (m, n) = (w.rows(), x.cols());
    let wbits = w.scheme().bitwidth();
    let xbits = x.scheme().bitwidth();
    let mut weight_groups = Vec::with_capacity(m);
    for r in 0..m {
        let row = w
            .row(r)
            .iter()
            .map(|&v| encode(v as i64, encoding, wbits))
            .collect::<Result<Vec<_>>>()?;
        let groups = partition_into_groups_analytics(&row, group_size)?.groups;
        let groups = match budget {
            Some(k) => groups
                .iter()
                .map(|g| receding_water_select(g, k).map(|r| r.kept))
                .collect::<Result<Vec<_>>>()?,
            None => groups,
        };
        weight_groups.push(groups);
    }
    let mut data_groups = Vec::with_capacity(n);
    for c in 0..n {
        let col = (0..x.rows())
            .map(|r| {
                encode(x.get(r, c) as i64, encoding, xbits)
                    .map(|e| data_terms.map_or(e.clone(), |s| truncate_data_terms(&e, s)))
            })
            .collect::<Result<Vec<_>>>()?;
        let groups: Vec<Vec<TermExpansion>> = partition_into_groups_analytics(&col, group_size)?
            .groups
            .into_iter()
            .map(TermGroup::into_expansions)
            .collect();
        data_groups.push(groups);
    }
    let mut out = vec![0i64; m * n];
    let mut hist = BTreeMap::new();
    for i in 0..m {
        for j in 0..n {
            let mut cv = CoefficientVector::new();
            for (wg, xg) in weight_groups[i].iter().zip(&data_groups[j]) {
                *hist.entry(count_term_pairs(wg, xg)).or_insert(0) += 1;
                cv = dot_product_terms(wg, xg, cv)?.0;
            }
            out[i * n + j] = cv.value();
        }
    }
    let scale = w.scheme().scale_exponent() + x.scheme().scale_exponent();
    Ok(GroupedProduct {
        output: IntMatrix::new(m, n, out, scale)?,
        pair_histogram: hist,
    })
}

/// Per-layer mean absolute weight error for the QT 6/7/8-bit settings and
/// 8-bit QT followed by TR.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantErrorRow {
    pub layer: usize,
    pub qt6: f64,
    pub qt7: f64,
    pub qt8: f64,
    pub tr: f64,
}

pub const QUANT_ERROR_TR_GROUP: usize = 8;
pub const QUANT_ERROR_TR_BUDGET: usize = 14;

pub fn quant_error_row(layer: usize, weights: &Matrix, encoding: Encoding) -> Result<QuantErrorRow> {
    let err = |b| quantize(weights, b).and_then(|q| mean_abs_quant_error(weights, &q));
    let q8 = quantize(weights, 8)?;
    let tr = TrConfig {
        group_size: QUANT_ERROR_TR_GROUP,
        budget: QUANT_ERROR_TR_BUDGET,
        data_terms: 8,
        encoding,
    };
    let revealed = reveal_weights(&q8, &tr)?;
    Ok(QuantErrorRow {
        layer,
        qt6: err(6)?,
        qt7: err(7)?,
        qt8: mean_abs_quant_error(weights, &q8)?,
        tr: revealed_weight_error(weights, &revealed.values, q8.scheme().scale_exponent()),
    })
}

/// Dequantized view used by CSV re-ingestion checks.
pub fn dequantized(m: &QuantizedMatrix) -> Matrix {
    dequantize(m)
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Normal => "normal",
            Distribution::HalfNormal => "half_normal",
            Distribution::Uniform => "uniform",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(Distribution::Normal, 4, 5, 1.0, 7).unwrap();
        let b = generate_synthetic(Distribution::Normal, 4, 5, 1.0, 7).unwrap();
        assert_eq!(crate::io::matrix_to_csv(&a), crate::io::matrix_to_csv(&b));
        let c = generate_synthetic(Distribution::Normal, 4, 5, 1.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn half_normal_non_negative() {
        let m = generate_synthetic(Distribution::HalfNormal, 50, 50, 2.0, 1).unwrap();
        assert!(m.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn normal_mean_abs_matches_theory() {
        let sigma = 1.5;
        let m = generate_synthetic(Distribution::Normal, 200, 200, sigma, 3).unwrap();
        let n = m.data().len() as f64;
        let mean_abs = m.data().iter().map(|v| v.abs()).sum::<f64>() / n;
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        // sd of |X| is sigma * sqrt(1 - 2/pi)
        let se = sigma * (1.0 - 2.0 / std::f64::consts::PI).sqrt() / n.sqrt();
        assert!((mean_abs - expected).abs() < 3.0 * se);
    }

    #[test]
    fn uniform_within_bounds() {
        let m = generate_synthetic(Distribution::Uniform, 10, 10, 0.5, 2).unwrap();
        assert!(m.data().iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(generate_synthetic(Distribution::Normal, 2, 2, 0.0, 1).is_err());
        assert!(generate_synthetic(Distribution::Normal, 2, 2, f64::NAN, 1).is_err());
    }

    fn small_pipeline(tr: Option<TrConfig>) -> (PipelineSpec, Matrix) {
        let w1 = generate_synthetic(Distribution::Normal, 16, 32, 0.1, 11).unwrap();
        let w2 = generate_synthetic(Distribution::Normal, 4, 16, 0.1, 12).unwrap();
        let x = generate_synthetic(Distribution::HalfNormal, 32, 6, 1.0, 13).unwrap();
        let spec = PipelineSpec {
            layers: vec![
                Layer {
                    weights: w1,
                    activation: Activation::Relu,
                },
                Layer {
                    weights: w2,
                    activation: Activation::None,
                },
            ],
            qt_bitwidth: 8,
            tr,
        };
        (spec, x)
    }

    #[test]
    fn qt_only_report() {
        let (spec, x) = small_pipeline(None);
        let r = compare_qt_tr(&spec, &x).unwrap();
        assert!(r.output_rel_error_tr.is_none());
        assert!(r.pairs_per_sample_tr.is_none());
        assert!(r.pairs_per_sample_qt > 0.0);
        assert!(r.pairs_per_sample_qt <= r.pairs_per_sample_qt_worst_case);

        // QT pairs are the popcount products of the quantized operands
        let wq = quantize(&spec.layers[0].weights, 8).unwrap();
        let xq = quantize(&x, 8).unwrap();
        let mut direct = 0u64;
        for i in 0..wq.rows() {
            for p in 0..wq.cols() {
                for j in 0..xq.cols() {
                    direct += (wq.get(i, p).unsigned_abs().count_ones()
                        * xq.get(p, j).unsigned_abs().count_ones()) as u64;
                }
            }
        }
        assert_eq!(r.layers[0].pairs_per_sample_qt, direct as f64 / 6.0);
    }

    #[test]
    fn saturated_budget_matches_qt() {
        let g = 4;
        let tr = TrConfig {
            group_size: g,
            budget: 7 * g,
            data_terms: 7,
            encoding: Encoding::Binary,
        };
        let (spec, x) = small_pipeline(Some(tr));
        let r = compare_qt_tr(&spec, &x).unwrap();
        assert_eq!(r.output_tr.as_ref().unwrap(), &r.output_qt);
        assert_eq!(r.pairs_per_sample_tr.unwrap(), r.pairs_per_sample_qt);
        assert_eq!(r.layers[0].mean_sigma_tr, Some(0.0));
    }

    #[test]
    fn identity_layer_error_is_input_error() {
        let n = 8;
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        let x = generate_synthetic(Distribution::HalfNormal, n, 5, 1.0, 4).unwrap();
        let spec = PipelineSpec {
            layers: vec![Layer {
                weights: Matrix::new(n, n, id).unwrap(),
                activation: Activation::None,
            }],
            qt_bitwidth: 8,
            tr: None,
        };
        let r = compare_qt_tr(&spec, &x).unwrap();
        let xq = dequantize(&quantize(&x, 8).unwrap());
        assert_eq!(r.output_rel_error_qt, relative_error(&xq, &x));
        assert_eq!(r.layers[0].weight_error_qt, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (mut spec, x) = small_pipeline(None);
        spec.layers.swap(0, 1);
        assert!(matches!(compare_qt_tr(&spec, &x), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn sweep_shapes() {
        let (spec, x) = small_pipeline(None);
        let one = SweepSpec {
            group_sizes: vec![4],
            alphas: vec![1.5],
            data_terms: vec![3],
            encodings: vec![Encoding::Hese],
        };
        let rows = sweep(&spec.layers, &x, 8, &one).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].budget, 6);

        let full = SweepSpec {
            group_sizes: vec![1, 2],
            alphas: vec![7.0],
            data_terms: vec![7],
            encodings: vec![Encoding::Binary, Encoding::Hese],
        };
        let rows = sweep(&spec.layers, &x, 8, &full).unwrap();
        assert_eq!(rows.len(), 4);
        let qt = compare_qt_tr(&spec, &x).unwrap();
        for r in rows.iter().filter(|r| r.encoding == Encoding::Binary) {
            assert_eq!(r.mean_sigma, 0.0);
            assert_eq!(r.output_rel_error, qt.output_rel_error_qt);
        }
        assert_eq!(
            rows.iter().map(|r| (r.group_size, r.encoding)).collect::<Vec<_>>(),
            vec![
                (1, Encoding::Binary),
                (1, Encoding::Hese),
                (2, Encoding::Binary),
                (2, Encoding::Hese)
            ]
        );
    }

    #[test]
    fn grouped_matmul_untruncated_is_exact() {
        let w = quantize(&generate_synthetic(Distribution::Normal, 5, 20, 1.0, 1).unwrap(), 8).unwrap();
        let x = quantize(&generate_synthetic(Distribution::HalfNormal, 20, 3, 1.0, 2).unwrap(), 8).unwrap();
        let p = grouped_term_matmul(&w, &x, 16, None, None, Encoding::Binary).unwrap();
        let expect = integer_matmul(&int_values(&w), &int_values(&x), 5, 20, 3);
        assert_eq!(p.output.values, expect);
        assert_eq!(p.pair_histogram.values().sum::<usize>(), 5 * 3 * 2);
        assert!(p.pair_histogram.keys().all(|&k| k <= 784));
    }

    #[test]
    fn all_zero_histograms_are_degenerate() {
        let z = quantize(&Matrix::zeros(3, 16).unwrap(), 8).unwrap();
        for (_, h) in term_histograms(&z) {
            assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
        }
        let x = quantize(&Matrix::zeros(16, 2).unwrap(), 8).unwrap();
        let p = grouped_term_matmul(&z, &x, 16, None, None, Encoding::Binary).unwrap();
        assert_eq!(p.pair_histogram.into_iter().collect::<Vec<_>>(), vec![(0, 6)]);
    }
}
