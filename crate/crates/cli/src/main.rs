//! `termreveal` command-line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use termreveal::analysis::Distribution;
use termreveal::Encoding;

#[derive(Parser, Debug)]
#[command(name = "termreveal", version, about = "Term revealing quantization toolkit")]
struct Cli {
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the signed-digit encoding of one integer.
    Encode(EncodeArgs),
    /// Write a seeded synthetic matrix as CSV.
    Generate(GenerateArgs),
    /// Quantize a real CSV matrix to a fixed-point CSV plus JSON sidecar.
    Quantize(QuantizeArgs),
    /// Apply term revealing to the rows of a quantized matrix.
    Tr(TrArgs),
    /// Grouped term-pair matrix product with a per-group pair histogram.
    Dot(DotArgs),
    /// Simulate a systolic array matrix product.
    Simulate(SimulateArgs),
    /// Term-count histograms, term-pair histogram and quantization error table.
    Stats(StatsArgs),
    /// Sweep group size, alpha, data terms and encoding over a pipeline.
    Sweep(SweepArgs),
    /// Compare float, QT and TR forward passes of a pipeline.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EncodingArg {
    Binary,
    Booth,
    Hese,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Binary => Encoding::Binary,
            EncodingArg::Booth => Encoding::Booth,
            EncodingArg::Hese => Encoding::Hese,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DistArg {
    Normal,
    HalfNormal,
    Uniform,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Normal => Distribution::Normal,
            DistArg::HalfNormal => Distribution::HalfNormal,
            DistArg::Uniform => Distribution::Uniform,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Qt,
    Tr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MacArg {
    Pmac,
    Tmac,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub value: i64,
    #[arg(long, value_enum, default_value = "hese")]
    pub encoding: EncodingArg,
    /// Operand bitwidth.
    #[arg(long, default_value_t = 8)]
    pub bits: u32,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "normal")]
    pub dist: DistArg,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "matrix.csv")]
    pub out: String,
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub bits: u32,
    #[arg(long, default_value = "quantized.csv")]
    pub out: String,
}

#[derive(Args, Debug)]
pub struct TrArgs {
    /// Quantized matrix CSV (sidecar JSON alongside).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub group_size: usize,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, value_enum, default_value = "hese")]
    pub encoding: EncodingArg,
    #[arg(long, default_value = "tr.csv")]
    pub out: String,
}

#[derive(Args, Debug)]
pub struct DotArgs {
    /// Quantized weight matrix `m x k`.
    #[arg(long)]
    pub weights: PathBuf,
    /// Quantized data matrix `k x n`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub group_size: usize,
    /// Group budget for the weights; no term revealing when omitted.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Leading terms kept per data value; untruncated when omitted.
    #[arg(long)]
    pub data_terms: Option<usize>,
    #[arg(long, value_enum, default_value = "binary")]
    pub encoding: EncodingArg,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "tr")]
    pub mode: ModeArg,
    /// MAC type; defaults to pmac for qt and tmac for tr.
    #[arg(long, value_enum)]
    pub mac: Option<MacArg>,
    #[arg(long, default_value_t = 128)]
    pub rows: usize,
    #[arg(long, default_value_t = 64)]
    pub cols: usize,
    #[arg(long, default_value_t = 8)]
    pub group_size: u8,
    #[arg(long, default_value_t = 12)]
    pub budget: u8,
    #[arg(long, default_value_t = 3)]
    pub data_terms: u8,
    #[arg(long, default_value_t = 8)]
    pub bits: u8,
    /// Control register JSON; overrides mode, group size, budget, data terms
    /// and bits.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cycle count per column follows the slowest cell instead of s*k.
    #[arg(long)]
    pub unsynchronized: bool,
    /// Charge weight-load cycles for every tile.
    #[arg(long)]
    pub no_double_buffer: bool,
    #[arg(long, default_value_t = termreveal::systolic::DEFAULT_SWITCH_LATENCY)]
    pub switch_latency: u64,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Real-valued weight matrix CSV; repeat for several layers.
    #[arg(long = "matrix", required = true)]
    pub matrices: Vec<PathBuf>,
    /// Real-valued data matrix for the term-pair histogram against the
    /// first weight matrix.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub group_size: usize,
    #[arg(long, default_value_t = 8)]
    pub bits: u32,
    /// Encoding used for the TR column of the error table.
    #[arg(long, value_enum, default_value = "hese")]
    pub tr_encoding: EncodingArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Pipeline JSON description.
    #[arg(long)]
    pub pipeline: PathBuf,
    /// Real input CSV, one sample per column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub group_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub data_terms: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "hese")]
    pub encodings: Vec<EncodingArg>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    pub pipeline: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .downcast_ref::<termreveal::Error>()
                .map_or("other", termreveal::Error::kind);
            eprintln!("{}", error_json(kind, &format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
