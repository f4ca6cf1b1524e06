//! Term revealing: run-time, group-based quantization of fixed-point
//! operands.
//!
//! Values are decomposed into signed power-of-two terms ([`sdr`]), each group
//! of `g` values keeps only its `k` largest terms ([`reveal`]), and dot
//! products are evaluated as term-pair multiplications accumulated in a
//! coefficient vector ([`dot`]). [`systolic`] models the cycle and work cost
//! of bit-parallel and term-based MAC arrays; [`analysis`] runs end-to-end
//! comparisons against conventional uniform quantization ([`quant`]).

pub mod analysis;
pub mod dot;
pub mod error;
pub mod io;
pub mod quant;
pub mod reveal;
pub mod sdr;
pub mod systolic;

pub use dot::{CoefficientVector, DotResult, TermPair};
pub use error::{Error, Result};
pub use quant::{IntMatrix, Matrix, QuantScheme, QuantizedMatrix};
pub use reveal::{GroupBudget, RevealResult, TermGroup};
pub use sdr::{DigitStream, Encoding, Sign, SignedTerm, TermExpansion};
pub use systolic::{ArrayConfig, ControlRegisters, CostModel, MacKind, OperatingMode, WorkReport};
