use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use termreveal::analysis::{
    compare_qt_tr, generate_synthetic, grouped_term_matmul, quant_error_row, reveal_weights,
    sweep, term_histograms, Activation, Layer, PipelineSpec, SweepSpec, TrConfig, SWEEP_HEADER,
};
use termreveal::io::{
    fmt_float, read_matrix, read_quantized, table_to_csv, to_json_rounded, write_int_matrix,
    write_matrix, write_quantized,
};
use termreveal::quant::{quantize, IntMatrix, QuantizedMatrix};
use termreveal::sdr::{encode, hese_streams};
use termreveal::systolic::{
    simulate_matmul, work_ratio, ArrayConfig, ControlRegisters, Controller, MacKind, ModeRequest,
    OperatingMode, StragglerStats, TileRecord, WorkReport,
};
use termreveal::{Encoding, Matrix};

use crate::{
    Cli, Command, DotArgs, EncodeArgs, GenerateArgs, MacArg, ModeArg, PipelineArgs, QuantizeArgs,
    SimulateArgs, StatsArgs, SweepArgs, TrArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    let out = &cli.output_dir;
    if !matches!(cli.command, Command::Encode(_)) {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    }
    match &cli.command {
        Command::Encode(a) => encode_cmd(a),
        Command::Generate(a) => generate_cmd(a, cli.seed, out),
        Command::Quantize(a) => quantize_cmd(a, out),
        Command::Tr(a) => tr_cmd(a, out),
        Command::Dot(a) => dot_cmd(a, out),
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Stats(a) => stats_cmd(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
        Command::Pipeline(a) => pipeline_cmd(a, out),
    }
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Print to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn emit_json<T: Serialize>(path: PathBuf, value: &T) -> Result<()> {
    let json = to_json_rounded(value)?;
    write(path, &format!("{json}\n"))?;
    say(&json);
    Ok(())
}

fn load_quantized(path: &Path) -> Result<QuantizedMatrix> {
    read_quantized(path).with_context(|| format!("reading quantized matrix {}", path.display()))
}

fn load_matrix(path: &Path) -> Result<Matrix> {
    read_matrix(path).with_context(|| format!("reading matrix {}", path.display()))
}

fn encode_cmd(a: &EncodeArgs) -> Result<()> {
    let enc: Encoding = a.encoding.into();
    let e = encode(a.value, enc, a.bits)?;
    say(&format!("value: {}", a.value));
    say(&format!("encoding: {enc}"));
    say(&format!("digits: {}", e.digit_string()));
    say(&format!("terms: {e}"));
    say(&format!("term_count: {}", e.len()));
    if enc == Encoding::Hese {
        let s = hese_streams(a.value, a.bits)?;
        let w = a.bits as usize;
        say(&format!("magnitude_stream: {}", s.magnitude_string(w)));
        say(&format!("sign_stream: {}", s.sign_string(w)));
    }
    Ok(())
}

fn generate_cmd(a: &GenerateArgs, seed: u64, out: &Path) -> Result<()> {
    let m = generate_synthetic(a.dist.into(), a.rows, a.cols, a.sigma, seed)?;
    let path = out.join(&a.out);
    write_matrix(&path, &m)?;
    say(&path.display().to_string());
    Ok(())
}

#[derive(Serialize)]
struct QuantizeReport {
    rows: usize,
    cols: usize,
    bitwidth: u32,
    scale_exponent: i32,
    mean_abs_quant_error: f64,
}

fn quantize_cmd(a: &QuantizeArgs, out: &Path) -> Result<()> {
    let m = load_matrix(&a.input)?;
    let q = quantize(&m, a.bits)?;
    let path = out.join(&a.out);
    write_quantized(&path, &q)?;
    let report = QuantizeReport {
        rows: q.rows(),
        cols: q.cols(),
        bitwidth: q.scheme().bitwidth(),
        scale_exponent: q.scheme().scale_exponent(),
        mean_abs_quant_error: termreveal::quant::mean_abs_quant_error(&m, &q)?,
    };
    say(&to_json_rounded(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct TrReport {
    group_size: usize,
    budget: usize,
    encoding: Encoding,
    groups: usize,
    pruned_terms_total: usize,
    mean_sigma: f64,
    max_sigma: f64,
    terms_before: usize,
    terms_after: usize,
}

fn tr_cmd(a: &TrArgs, out: &Path) -> Result<()> {
    let q = load_quantized(&a.input)?;
    let cfg = TrConfig {
        group_size: a.group_size,
        budget: a.budget,
        data_terms: q.scheme().bitwidth() as usize,
        encoding: a.encoding.into(),
    };
    let r = reveal_weights(&q, &cfg)?;
    let bits = q.scheme().bitwidth();
    let before: usize = q
        .values()
        .iter()
        .map(|&v| encode(v as i64, cfg.encoding, bits).map(|e| e.len()))
        .sum::<termreveal::Result<usize>>()?;
    let m = IntMatrix::new(q.rows(), q.cols(), r.values, q.scheme().scale_exponent())?;
    write_int_matrix(&out.join(&a.out), &m, bits)?;
    let n = r.sigmas.len();
    let report = TrReport {
        group_size: a.group_size,
        budget: a.budget,
        encoding: cfg.encoding,
        groups: n,
        pruned_terms_total: r.pruned_terms,
        mean_sigma: if n == 0 { 0.0 } else { r.sigmas.iter().sum::<f64>() / n as f64 },
        max_sigma: r.sigmas.iter().copied().fold(0.0, f64::max),
        terms_before: before,
        terms_after: r.term_counts.iter().sum(),
    };
    emit_json(out.join("tr_report.json"), &report)
}

fn histogram_csv(h: &BTreeMap<usize, usize>) -> String {
    let rows: Vec<Vec<String>> = h.iter().map(|(p, c)| vec![p.to_string(), c.to_string()]).collect();
    table_to_csv(&["pairs", "count"], &rows)
}

#[derive(Serialize)]
struct DotReport {
    group_size: usize,
    budget: Option<usize>,
    data_terms: Option<usize>,
    encoding: Encoding,
    groups: usize,
    mean_pairs: f64,
    max_pairs: usize,
    max_possible_pairs: usize,
}

fn dot_cmd(a: &DotArgs, out: &Path) -> Result<()> {
    let w = load_quantized(&a.weights)?;
    let x = load_quantized(&a.data)?;
    let enc: Encoding = a.encoding.into();
    let p = grouped_term_matmul(&w, &x, a.group_size, a.budget, a.data_terms, enc)?;
    write(out.join("pair_histogram.csv"), &histogram_csv(&p.pair_histogram))?;
    write_int_matrix(&out.join("dot_result.csv"), &p.output, w.scheme().bitwidth())?;
    let groups: usize = p.pair_histogram.values().sum();
    let total: usize = p.pair_histogram.iter().map(|(k, c)| k * c).sum();
    let b = (w.scheme().bitwidth() - 1) as usize;
    let report = DotReport {
        group_size: a.group_size,
        budget: a.budget,
        data_terms: a.data_terms,
        encoding: enc,
        groups,
        mean_pairs: if groups == 0 { 0.0 } else { total as f64 / groups as f64 },
        max_pairs: p.pair_histogram.keys().next_back().copied().unwrap_or(0),
        max_possible_pairs: a.group_size * b * b,
    };
    emit_json(out.join("dot_report.json"), &report)
}

#[derive(Serialize)]
struct SimulateReport {
    mode: OperatingMode,
    mac: MacKind,
    registers: ControlRegisters,
    array_rows: usize,
    array_cols: usize,
    synchronized: bool,
    double_buffered: bool,
    latency_model: &'static str,
    switch_cycles: u64,
    tiles: usize,
    report: WorkReport,
    straggler: Option<StragglerStats>,
    baseline_pmac: WorkReport,
    work_ratio_vs_pmac: Option<f64>,
}

fn tiles_csv(tiles: &[TileRecord]) -> String {
    let rows: Vec<Vec<String>> = tiles
        .iter()
        .map(|t| {
            [
                t.tile_row,
                t.tile_col,
                t.used_rows,
                t.used_cols,
                t.fill_cycles as usize,
                t.stream_cycles as usize,
                t.load_cycles as usize,
                t.total_cycles as usize,
            ]
            .iter()
            .map(usize::to_string)
            .collect()
        })
        .collect();
    table_to_csv(
        &[
            "tile_row",
            "tile_col",
            "used_rows",
            "used_cols",
            "fill_cycles",
            "stream_cycles",
            "load_cycles",
            "total_cycles",
        ],
        &rows,
    )
}

fn simulate_cmd(a: &SimulateArgs, out: &Path) -> Result<()> {
    let w = load_quantized(&a.weights)?;
    let x = load_quantized(&a.data)?;
    let registers = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let regs: ControlRegisters = serde_json::from_str(&text).map_err(termreveal::Error::from)?;
            regs.mode()?;
            regs
        }
        None => match a.mode {
            ModeArg::Qt => ControlRegisters::qt(a.bits)?,
            ModeArg::Tr => ControlRegisters::tr(a.bits, a.group_size, a.budget, a.data_terms)?,
        },
    };
    let mode = registers.mode()?;
    let mac = match a.mac {
        Some(MacArg::Pmac) => MacKind::Pmac,
        Some(MacArg::Tmac) => MacKind::Tmac,
        None if mode == OperatingMode::Qt => MacKind::Pmac,
        None => MacKind::Tmac,
    };
    if mac == MacKind::Pmac && mode == OperatingMode::Tr {
        bail!(termreveal::Error::InvalidConfig("pMAC arrays only run in QT mode".into()));
    }
    let pmac_group = a.group_size.max(1) as usize;
    let mut cfg = match mac {
        MacKind::Pmac => ArrayConfig::pmac(a.rows, a.cols, pmac_group, registers.quant_bitwidth)?,
        MacKind::Tmac => ArrayConfig::tmac(a.rows, a.cols, registers)?,
    };
    cfg.synchronized = !a.unsynchronized;
    cfg.double_buffered = !a.no_double_buffer;

    let mut controller =
        Controller::new(ControlRegisters::qt(registers.quant_bitwidth)?)?.with_switch_latency(a.switch_latency);
    let target = match mode {
        OperatingMode::Qt => ModeRequest::Qt { bitwidth: registers.quant_bitwidth },
        OperatingMode::Tr => ModeRequest::Tr {
            bitwidth: registers.quant_bitwidth,
            group_size: registers.group_size,
            budget: registers.group_budget,
            data_terms: registers.data_terms,
        },
    };
    controller.reconfigure(target)?;

    let run = simulate_matmul(&w, &x, &cfg)?;
    let mut base_cfg = ArrayConfig::pmac(a.rows, a.cols, pmac_group, registers.quant_bitwidth)?;
    base_cfg.double_buffered = cfg.double_buffered;
    let baseline = simulate_matmul(&w, &x, &base_cfg)?.report;

    write(out.join("tiles.csv"), &tiles_csv(&run.tiles))?;
    write_int_matrix(&out.join("simulate_result.csv"), &run.output, registers.quant_bitwidth as u32)?;
    let report = SimulateReport {
        mode,
        mac,
        registers,
        array_rows: a.rows,
        array_cols: a.cols,
        synchronized: cfg.synchronized,
        double_buffered: cfg.double_buffered,
        latency_model: "per tile: fill (rows + cols - 1) + streamed columns x per-group cycles + weight load when not double buffered",
        switch_cycles: controller.switch_cycles(),
        tiles: run.tiles.len(),
        report: run.report,
        straggler: run.straggler,
        work_ratio_vs_pmac: work_ratio(&run.report, &baseline).ok(),
        baseline_pmac: baseline,
    };
    emit_json(out.join("simulate_report.json"), &report)
}

#[derive(Serialize)]
struct EncodingSummary {
    encoding: Encoding,
    mean_terms: f64,
    fraction_at_most_3_terms: f64,
}

#[derive(Serialize)]
struct StatsReport {
    weight_terms: Vec<EncodingSummary>,
    data_terms: Option<Vec<EncodingSummary>>,
    pair_histogram_group_size: Option<usize>,
    pair_histogram_max: Option<usize>,
    pair_histogram_bound: Option<usize>,
}

fn write_term_histograms(prefix: &str, values: &[i32], bits: u32, out: &Path) -> Result<Vec<EncodingSummary>> {
    // pool all matrices into a single row so the histogram is over elements
    let scheme = termreveal::QuantScheme::new(bits, 0)?;
    let pooled = QuantizedMatrix::new(1, values.len(), values.to_vec(), scheme)?;
    let mut summary = Vec::new();
    for (enc, h) in term_histograms(&pooled) {
        let rows: Vec<Vec<String>> = h.iter().map(|(t, f)| vec![t.to_string(), fmt_float(*f)]).collect();
        write(out.join(format!("{prefix}_{enc}.csv")), &table_to_csv(&["term_count", "fraction"], &rows))?;
        summary.push(EncodingSummary {
            encoding: enc,
            mean_terms: h.iter().map(|(t, f)| *t as f64 * f).sum(),
            fraction_at_most_3_terms: h.range(..=3).map(|(_, f)| f).sum(),
        });
    }
    Ok(summary)
}

fn stats_cmd(a: &StatsArgs, out: &Path) -> Result<()> {
    let mats = a.matrices.iter().map(|p| load_matrix(p)).collect::<Result<Vec<_>>>()?;
    let mut pooled = Vec::new();
    let mut error_rows = Vec::new();
    for (i, m) in mats.iter().enumerate() {
        pooled.extend_from_slice(quantize(m, a.bits)?.values());
        let r = quant_error_row(i, m, a.tr_encoding.into())?;
        error_rows.push(vec![
            i.to_string(),
            fmt_float(r.qt6),
            fmt_float(r.qt7),
            fmt_float(r.qt8),
            fmt_float(r.tr),
        ]);
    }
    write(
        out.join("quant_error.csv"),
        &table_to_csv(&["layer", "qt6", "qt7", "qt8", "tr_g8_k14"], &error_rows),
    )?;
    let weight_terms = write_term_histograms("weight_terms", &pooled, a.bits, out)?;

    let mut report = StatsReport {
        weight_terms,
        data_terms: None,
        pair_histogram_group_size: None,
        pair_histogram_max: None,
        pair_histogram_bound: None,
    };
    if let Some(path) = &a.data {
        let xq = quantize(&load_matrix(path)?, a.bits)?;
        report.data_terms = Some(write_term_histograms("data_terms", xq.values(), a.bits, out)?);
        let wq = quantize(&mats[0], a.bits)?;
        let p = grouped_term_matmul(&wq, &xq, a.group_size, None, None, Encoding::Binary)?;
        write(out.join(format!("pairs_g{}.csv", a.group_size)), &histogram_csv(&p.pair_histogram))?;
        let b = (a.bits - 1) as usize;
        report.pair_histogram_group_size = Some(a.group_size);
        report.pair_histogram_max = p.pair_histogram.keys().next_back().copied();
        report.pair_histogram_bound = Some(a.group_size * b * b);
    }
    emit_json(out.join("stats_report.json"), &report)
}

#[derive(Deserialize)]
struct LayerFile {
    weights: PathBuf,
    #[serde(default = "default_activation")]
    activation: String,
}

fn default_activation() -> String {
    "relu".into()
}

#[derive(Deserialize)]
struct TrFile {
    group_size: usize,
    budget: usize,
    data_terms: usize,
    encoding: Encoding,
}

#[derive(Deserialize)]
struct PipelineFile {
    layers: Vec<LayerFile>,
    #[serde(default = "default_bits")]
    qt_bitwidth: u32,
    tr: Option<TrFile>,
}

fn default_bits() -> u32 {
    8
}

/// Weight paths are relative to the pipeline file.
fn load_pipeline(path: &Path) -> Result<PipelineSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: PipelineFile = serde_json::from_str(&text).map_err(termreveal::Error::from)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let layers = file
        .layers
        .iter()
        .map(|l| {
            Ok(Layer {
                weights: load_matrix(&base.join(&l.weights))?,
                activation: l.activation.parse::<Activation>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if layers.is_empty() {
        bail!(termreveal::Error::InvalidConfig("pipeline has no layers".into()));
    }
    Ok(PipelineSpec {
        layers,
        qt_bitwidth: file.qt_bitwidth,
        tr: file.tr.map(|t| TrConfig {
            group_size: t.group_size,
            budget: t.budget,
            data_terms: t.data_terms,
            encoding: t.encoding,
        }),
    })
}

fn sweep_cmd(a: &SweepArgs, out: &Path) -> Result<()> {
    let pipeline = load_pipeline(&a.pipeline)?;
    let input = load_matrix(&a.input)?;
    let spec = SweepSpec {
        group_sizes: a.group_sizes.clone(),
        alphas: a.alphas.clone(),
        data_terms: a.data_terms.clone(),
        encodings: a.encodings.iter().map(|&e| e.into()).collect(),
    };
    let rows = sweep(&pipeline.layers, &input, pipeline.qt_bitwidth, &spec)?;
    let fields: Vec<Vec<String>> = rows.iter().map(|r| r.to_fields()).collect();
    let csv = table_to_csv(&SWEEP_HEADER, &fields);
    write(out.join("sweep.csv"), &csv)?;
    say(csv.trim_end());
    Ok(())
}

fn pipeline_cmd(a: &PipelineArgs, out: &Path) -> Result<()> {
    let pipeline = load_pipeline(&a.pipeline)?;
    let input = load_matrix(&a.input)?;
    let report = compare_qt_tr(&pipeline, &input)?;
    emit_json(out.join("pipeline_report.json"), &report)
}
