//! Work and cycle model of bit-parallel (pMAC) and term (tMAC) systolic
//! arrays.
//!
//! The array is weight-stationary. Cell `(r, c)` holds the `r`-th weight
//! group of output row `c` and data columns stream through the array. Tile
//! latency is modeled as a pipeline fill of `rows + cols - 1` cycles plus a
//! fixed number of cycles per streamed column:
//!
//! * pMAC: `g` cycles, one multiply-accumulate per cycle;
//! * tMAC, synchronized: `s * k` cycles, the bound every group satisfies
//!   after term revealing;
//! * tMAC, unsynchronized: the largest actual pair count in the wavefront.
//!
//! Without weight double-buffering each tile also pays one cycle per cell to
//! load its weights.

use serde::{Deserialize, Serialize};

use crate::dot::{dot_product_terms, CoefficientVector};
use crate::error::{Error, Result};
use crate::quant::{IntMatrix, QuantizedMatrix};
use crate::reveal::{
    partition_into_groups, receding_water_select, truncate_data_terms, GroupBudget, TermGroup,
    HARDWARE_MAX_BUDGET, HARDWARE_MAX_GROUP,
};
use crate::sdr::{encode, Encoding, TermExpansion};

pub const DEFAULT_SWITCH_LATENCY: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatingMode {
    Qt,
    Tr,
}

/// Register file switching the array between uniform quantization and term
/// revealing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlRegisters {
    #[serde(rename = "HESE_ENCODER_ON")]
    pub hese_encoder_on: u8,
    #[serde(rename = "COMPARATOR_ON")]
    pub comparator_on: u8,
    #[serde(rename = "QUANT_BITWIDTH")]
    pub quant_bitwidth: u8,
    #[serde(rename = "DATA_TERMS")]
    pub data_terms: u8,
    #[serde(rename = "GROUP_SIZE")]
    pub group_size: u8,
    #[serde(rename = "GROUP_BUDGET")]
    pub group_budget: u8,
}

/// Requested target of a reconfiguration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeRequest {
    Qt {
        bitwidth: u8,
    },
    Tr {
        bitwidth: u8,
        group_size: u8,
        budget: u8,
        data_terms: u8,
    },
}

impl ControlRegisters {
    pub fn qt(bitwidth: u8) -> Result<Self> {
        let r = Self {
            hese_encoder_on: 0,
            comparator_on: 0,
            quant_bitwidth: bitwidth,
            data_terms: bitwidth,
            group_size: 1,
            group_budget: bitwidth,
        };
        r.mode().map(|_| r)
    }

    pub fn tr(bitwidth: u8, group_size: u8, budget: u8, data_terms: u8) -> Result<Self> {
        let r = Self {
            hese_encoder_on: 1,
            comparator_on: 1,
            quant_bitwidth: bitwidth,
            data_terms,
            group_size,
            group_budget: budget,
        };
        r.mode().map(|_| r)
    }

    fn check_fields(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRegisters(msg));
        if self.hese_encoder_on > 1 {
            return bad(format!("HESE_ENCODER_ON={} (1 bit)", self.hese_encoder_on));
        }
        if self.comparator_on > 1 {
            return bad(format!("COMPARATOR_ON={} (1 bit)", self.comparator_on));
        }
        if !(2..=8).contains(&self.quant_bitwidth) {
            return bad(format!("QUANT_BITWIDTH={} (2..=8)", self.quant_bitwidth));
        }
        if !(1..=15).contains(&self.data_terms) {
            return bad(format!("DATA_TERMS={} (4 bit)", self.data_terms));
        }
        // 3-bit field holding g - 1
        if !(1..=HARDWARE_MAX_GROUP as u8).contains(&self.group_size) {
            return bad(format!("GROUP_SIZE={} (3 bit)", self.group_size));
        }
        if !(1..=31).contains(&self.group_budget) {
            return bad(format!("GROUP_BUDGET={} (5 bit)", self.group_budget));
        }
        Ok(())
    }

    /// Mode implied by the register contents, or an error for combinations
    /// that are neither valid QT nor valid TR.
    pub fn mode(&self) -> Result<OperatingMode> {
        self.check_fields()?;
        let b = self.quant_bitwidth;
        match (self.hese_encoder_on, self.comparator_on) {
            (0, 0) => {
                if self.group_size == 1 && self.group_budget == b && self.data_terms == b {
                    Ok(OperatingMode::Qt)
                } else {
                    Err(Error::InvalidRegisters(
                        "QT requires GROUP_SIZE=1 and GROUP_BUDGET=DATA_TERMS=QUANT_BITWIDTH"
                            .into(),
                    ))
                }
            }
            (1, 1) => {
                if self.group_size >= 2 && self.group_budget as usize <= HARDWARE_MAX_BUDGET {
                    Ok(OperatingMode::Tr)
                } else {
                    Err(Error::InvalidRegisters(
                        "TR requires GROUP_SIZE in 2..=8 and GROUP_BUDGET <= 24".into(),
                    ))
                }
            }
            _ => Err(Error::InvalidRegisters(
                "HESE_ENCODER_ON and COMPARATOR_ON must match".into(),
            )),
        }
    }

    /// Register contents after switching to `target`.
    pub fn reconfigure(&self, target: ModeRequest) -> Result<ControlRegisters> {
        match target {
            ModeRequest::Qt { bitwidth } => Self::qt(bitwidth),
            ModeRequest::Tr {
                bitwidth,
                group_size,
                budget,
                data_terms,
            } => Self::tr(bitwidth, group_size, budget, data_terms),
        }
    }

    pub fn encoding(&self) -> Encoding {
        if self.hese_encoder_on == 1 {
            Encoding::Hese
        } else {
            Encoding::Binary
        }
    }
}

/// Register file plus switch-latency accounting.
#[derive(Clone, Debug)]
pub struct Controller {
    registers: ControlRegisters,
    switch_latency: u64,
    switch_cycles: u64,
}

impl Controller {
    pub fn new(registers: ControlRegisters) -> Result<Self> {
        registers.mode()?;
        Ok(Self {
            registers,
            switch_latency: DEFAULT_SWITCH_LATENCY,
            switch_cycles: 0,
        })
    }

    pub fn with_switch_latency(mut self, cycles: u64) -> Self {
        self.switch_latency = cycles;
        self
    }

    pub fn registers(&self) -> ControlRegisters {
        self.registers
    }

    /// Total cycles spent switching so far.
    pub fn switch_cycles(&self) -> u64 {
        self.switch_cycles
    }

    /// Apply `target`; returns the cycles charged (zero if nothing changed).
    /// On error the registers are left untouched.
    pub fn reconfigure(&mut self, target: ModeRequest) -> Result<u64> {
        let next = self.registers.reconfigure(target)?;
        let cost = if next == self.registers {
            0
        } else {
            self.switch_latency
        };
        self.registers = next;
        self.switch_cycles += cost;
        Ok(cost)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacKind {
    Pmac,
    Tmac,
}

/// Work units charged per operation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub add3: f64,
    pub add8: f64,
    pub acc32: f64,
    pub bookkeeping: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            add3: 3.0,
            add8: 8.0,
            acc32: 32.0,
            bookkeeping: 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkReport {
    pub cycles: u64,
    pub add3_count: u64,
    pub add8_count: u64,
    pub acc32_count: u64,
    pub bookkeeping_count: u64,
    pub work_units: f64,
    pub term_pairs_total: u64,
}

impl WorkReport {
    fn priced(mut self, cost: &CostModel) -> Self {
        self.work_units = self.add3_count as f64 * cost.add3
            + self.add8_count as f64 * cost.add8
            + self.acc32_count as f64 * cost.acc32
            + self.bookkeeping_count as f64 * cost.bookkeeping;
        self
    }

    /// Sum of operation counts; work units are added as well.
    pub fn absorb(&mut self, other: &WorkReport) {
        self.cycles += other.cycles;
        self.add3_count += other.add3_count;
        self.add8_count += other.add8_count;
        self.acc32_count += other.acc32_count;
        self.bookkeeping_count += other.bookkeeping_count;
        self.work_units += other.work_units;
        self.term_pairs_total += other.term_pairs_total;
    }
}

/// One cell of a pMAC array over a group of `g` values: 7 8-bit additions
/// per multiply and one 32-bit accumulation per value, one value per cycle.
pub fn simulate_group_pmac(g: usize, cost: &CostModel) -> WorkReport {
    let g = g as u64;
    WorkReport {
        cycles: g,
        add8_count: 7 * g,
        acc32_count: g,
        ..Default::default()
    }
    .priced(cost)
}

/// One tMAC cell over a group with `pairs_actual` term pairs, budget `k`
/// and `s` data terms. Each cycle costs one 3-bit exponent addition and one
/// coefficient bookkeeping step.
pub fn simulate_group_tmac(
    pairs_actual: u64,
    k: usize,
    s: usize,
    synchronized: bool,
    cost: &CostModel,
) -> Result<WorkReport> {
    let bound = (k * s) as u64;
    if pairs_actual > bound {
        return Err(Error::PairBoundExceeded {
            pairs: pairs_actual,
            bound,
        });
    }
    let cycles = if synchronized { bound } else { pairs_actual };
    Ok(WorkReport {
        cycles,
        add3_count: cycles,
        bookkeeping_count: cycles,
        term_pairs_total: pairs_actual,
        ..Default::default()
    }
    .priced(cost))
}

/// `baseline.work_units / candidate.work_units`: how many times less work
/// the candidate does.
pub fn work_ratio(candidate: &WorkReport, baseline: &WorkReport) -> Result<f64> {
    if candidate.work_units == 0.0 {
        return Err(Error::ZeroWork);
    }
    Ok(baseline.work_units / candidate.work_units)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub mac: MacKind,
    pub registers: ControlRegisters,
    /// Values per cell for pMAC arrays; tMAC arrays use `GROUP_SIZE`.
    pub pmac_group_size: usize,
    pub synchronized: bool,
    pub double_buffered: bool,
    pub cost: CostModel,
}

impl ArrayConfig {
    /// Bit-parallel baseline in QT mode.
    pub fn pmac(rows: usize, cols: usize, group_size: usize, bitwidth: u8) -> Result<Self> {
        let cfg = Self {
            rows,
            cols,
            mac: MacKind::Pmac,
            registers: ControlRegisters::qt(bitwidth)?,
            pmac_group_size: group_size,
            synchronized: true,
            double_buffered: true,
            cost: CostModel::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tmac(rows: usize, cols: usize, registers: ControlRegisters) -> Result<Self> {
        let cfg = Self {
            rows,
            cols,
            mac: MacKind::Tmac,
            registers,
            pmac_group_size: registers.group_size as usize,
            synchronized: true,
            double_buffered: true,
            cost: CostModel::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("array dimensions must be positive".into()));
        }
        let mode = self.registers.mode()?;
        match self.mac {
            MacKind::Pmac if mode != OperatingMode::Qt => Err(Error::InvalidConfig(
                "pMAC arrays only run in QT mode".into(),
            )),
            MacKind::Pmac if self.pmac_group_size == 0 => {
                Err(Error::InvalidGroupSize(self.pmac_group_size))
            }
            _ => Ok(()),
        }
    }

    /// Values handled by one cell per streamed column.
    pub fn cell_group_size(&self) -> usize {
        match self.mac {
            MacKind::Pmac => self.pmac_group_size,
            MacKind::Tmac => self.registers.group_size as usize,
        }
    }

    pub fn mode(&self) -> Result<OperatingMode> {
        self.registers.mode()
    }
}

/// Cycle breakdown of one tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRecord {
    pub tile_row: usize,
    pub tile_col: usize,
    pub used_rows: usize,
    pub used_cols: usize,
    pub fill_cycles: u64,
    pub stream_cycles: u64,
    pub load_cycles: u64,
    pub total_cycles: u64,
}

/// Pair-count spread across cells that run concurrently in a wavefront.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StragglerStats {
    pub mean_group_pairs: f64,
    pub max_group_pairs: u64,
    /// Mean over wavefronts of (max pairs / mean pairs).
    pub mean_max_over_mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatmulRun {
    pub output: IntMatrix,
    pub report: WorkReport,
    pub tiles: Vec<TileRecord>,
    pub straggler: Option<StragglerStats>,
}

/// Operands in the form the array consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedOperands {
    /// Weight rows split into groups along the reduction dimension.
    pub weight_groups: Vec<Vec<TermGroup>>,
    /// Data columns split into groups, `[column][group]`.
    pub data_groups: Vec<Vec<Vec<TermExpansion>>>,
    pub group_size: usize,
}

impl PreparedOperands {
    /// Decoded (truncated) weights, `m x k`.
    pub fn weight_values(&self, k: usize) -> Vec<i64> {
        self.weight_groups
            .iter()
            .flat_map(|row| {
                let mut vals: Vec<i64> = row.iter().flat_map(TermGroup::values).collect();
                vals.truncate(k);
                vals
            })
            .collect()
    }

    /// Decoded (truncated) data, `k x n`.
    pub fn data_values(&self, k: usize) -> Vec<i64> {
        let n = self.data_groups.len();
        let mut out = vec![0i64; k * n];
        for (j, col) in self.data_groups.iter().enumerate() {
            for (i, e) in col.iter().flatten().take(k).enumerate() {
                out[i * n + j] = e.value();
            }
        }
        out
    }
}

fn check_dims(w: &QuantizedMatrix, x: &QuantizedMatrix) -> Result<()> {
    if w.cols() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: (w.cols(), x.cols()),
            actual: x.shape(),
        });
    }
    Ok(())
}

/// Encode and truncate operands for a tMAC array: weights get term revealing
/// per group when the comparator is on, data values keep their
/// `DATA_TERMS` leading terms.
pub fn prepare_tmac_operands(
    w: &QuantizedMatrix,
    x: &QuantizedMatrix,
    regs: &ControlRegisters,
) -> Result<PreparedOperands> {
    check_dims(w, x)?;
    let mode = regs.mode()?;
    let bits = regs.quant_bitwidth as u32;
    for m in [w, x] {
        if m.scheme().bitwidth() > bits {
            return Err(Error::InvalidConfig(format!(
                "{}-bit operand on a {bits}-bit array",
                m.scheme().bitwidth()
            )));
        }
    }
    let encoding = regs.encoding();
    let g = regs.group_size as usize;
    let budget = GroupBudget::hardware(g, regs.group_budget as usize)?;
    let s = regs.data_terms as usize;

    let mut weight_groups = Vec::with_capacity(w.rows());
    for r in 0..w.rows() {
        let row = w
            .row(r)
            .iter()
            .map(|&v| encode(v as i64, encoding, bits))
            .collect::<Result<Vec<_>>>()?;
        let groups = partition_into_groups(&row, g)?.groups;
        let groups = match mode {
            OperatingMode::Tr => groups
                .iter()
                .map(|grp| receding_water_select(grp, budget.budget()).map(|r| r.kept))
                .collect::<Result<Vec<_>>>()?,
            OperatingMode::Qt => groups,
        };
        weight_groups.push(groups);
    }

    let mut data_groups = Vec::with_capacity(x.cols());
    for c in 0..x.cols() {
        let col = (0..x.rows())
            .map(|r| encode(x.get(r, c) as i64, encoding, bits).map(|e| truncate_data_terms(&e, s)))
            .collect::<Result<Vec<_>>>()?;
        let groups = partition_into_groups(&col, g)?
            .groups
            .into_iter()
            .map(TermGroup::into_expansions)
            .collect();
        data_groups.push(groups);
    }
    Ok(PreparedOperands {
        weight_groups,
        data_groups,
        group_size: g,
    })
}

fn tile_cycles(
    cfg: &ArrayConfig,
    tile_row: usize,
    tile_col: usize,
    used_rows: usize,
    used_cols: usize,
    stream_cycles: u64,
) -> TileRecord {
    let fill_cycles = (used_rows + used_cols - 1) as u64;
    let load_cycles = if cfg.double_buffered {
        0
    } else {
        (used_rows * used_cols) as u64
    };
    TileRecord {
        tile_row,
        tile_col,
        used_rows,
        used_cols,
        fill_cycles,
        stream_cycles,
        load_cycles,
        total_cycles: fill_cycles + stream_cycles + load_cycles,
    }
}

/// Tiled matrix product `W (m x k) * X (k x n)` on the configured array.
pub fn simulate_matmul(w: &QuantizedMatrix, x: &QuantizedMatrix, cfg: &ArrayConfig) -> Result<MatmulRun> {
    cfg.validate()?;
    check_dims(w, x)?;
    match cfg.mac {
        MacKind::Pmac => simulate_pmac(w, x, cfg),
        MacKind::Tmac => simulate_tmac(w, x, cfg),
    }
}

fn simulate_pmac(w: &QuantizedMatrix, x: &QuantizedMatrix, cfg: &ArrayConfig) -> Result<MatmulRun> {
    let (m, k, n) = (w.rows(), w.cols(), x.cols());
    let g = cfg.cell_group_size();
    let groups = k.div_ceil(g);
    let mut out = vec![0i64; m * n];
    let mut report = WorkReport::default();
    let mut tiles = Vec::new();
    let group_report = simulate_group_pmac(g, &cfg.cost);

    for (tr, g0) in (0..groups).step_by(cfg.rows).enumerate() {
        let used_rows = cfg.rows.min(groups - g0);
        for (tc, m0) in (0..m).step_by(cfg.cols).enumerate() {
            let used_cols = cfg.cols.min(m - m0);
            for col in 0..n {
                for mi in m0..m0 + used_cols {
                    let mut acc = 0i64;
                    for gi in g0..g0 + used_rows {
                        for p in gi * g..((gi + 1) * g).min(k) {
                            acc += w.get(mi, p) as i64 * x.get(p, col) as i64;
                        }
                        report.absorb(&group_report);
                    }
                    out[mi * n + col] += acc;
                }
            }
            tiles.push(tile_cycles(cfg, tr, tc, used_rows, used_cols, n as u64 * g as u64));
        }
    }
    report.cycles = tiles.iter().map(|t| t.total_cycles).sum();
    let scale = w.scheme().scale_exponent() + x.scheme().scale_exponent();
    Ok(MatmulRun {
        output: IntMatrix::new(m, n, out, scale)?,
        report,
        tiles,
        straggler: None,
    })
}

fn simulate_tmac(w: &QuantizedMatrix, x: &QuantizedMatrix, cfg: &ArrayConfig) -> Result<MatmulRun> {
    let (m, n) = (w.rows(), x.cols());
    let ops = prepare_tmac_operands(w, x, &cfg.registers)?;
    let groups = ops.weight_groups.first().map_or(0, Vec::len);
    let k_budget = cfg.registers.group_budget as usize;
    let s = cfg.registers.data_terms as usize;

    let mut out = vec![0i64; m * n];
    let mut report = WorkReport::default();
    let mut tiles = Vec::new();
    let mut pair_sum = 0u64;
    let mut pair_max = 0u64;
    let mut group_count = 0u64;
    let mut ratio_sum = 0.0;
    let mut wavefronts = 0u64;

    for (tr, g0) in (0..groups).step_by(cfg.rows).enumerate() {
        let used_rows = cfg.rows.min(groups - g0);
        for (tc, m0) in (0..m).step_by(cfg.cols).enumerate() {
            let used_cols = cfg.cols.min(m - m0);
            let mut stream_cycles = 0u64;
            for col in 0..n {
                let mut wave_max = 0u64;
                let mut wave_sum = 0u64;
                for mi in m0..m0 + used_cols {
                    // the coefficient vector is handed from cell to cell
                    // down the column
                    let mut cv = CoefficientVector::new();
                    for gi in g0..g0 + used_rows {
                        let (next, dot) =
                            dot_product_terms(&ops.weight_groups[mi][gi], &ops.data_groups[col][gi], cv)?;
                        cv = next;
                        let pairs = dot.term_pairs_processed;
                        report.absorb(&simulate_group_tmac(pairs, k_budget, s, cfg.synchronized, &cfg.cost)?);
                        wave_max = wave_max.max(pairs);
                        wave_sum += pairs;
                    }
                    out[mi * n + col] += cv.value();
                }
                let cells = (used_rows * used_cols) as u64;
                pair_sum += wave_sum;
                pair_max = pair_max.max(wave_max);
                group_count += cells;
                if wave_sum > 0 {
                    ratio_sum += wave_max as f64 / (wave_sum as f64 / cells as f64);
                    wavefronts += 1;
                }
                stream_cycles += if cfg.synchronized {
                    (k_budget * s) as u64
                } else {
                    wave_max
                };
            }
            tiles.push(tile_cycles(cfg, tr, tc, used_rows, used_cols, stream_cycles));
        }
    }
    report.cycles = tiles.iter().map(|t| t.total_cycles).sum();
    let scale = w.scheme().scale_exponent() + x.scheme().scale_exponent();
    let straggler = StragglerStats {
        mean_group_pairs: if group_count > 0 {
            pair_sum as f64 / group_count as f64
        } else {
            0.0
        },
        max_group_pairs: pair_max,
        mean_max_over_mean: if wavefronts > 0 {
            ratio_sum / wavefronts as f64
        } else {
            0.0
        },
    };
    Ok(MatmulRun {
        output: IntMatrix::new(m, n, out, scale)?,
        report,
        tiles,
        straggler: Some(straggler),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::QuantScheme;

    fn qm(rows: usize, cols: usize, values: Vec<i32>) -> QuantizedMatrix {
        QuantizedMatrix::new(rows, cols, values, QuantScheme::new(8, 0).unwrap()).unwrap()
    }

    #[test]
    fn tr_to_qt_switch() {
        let tr = ControlRegisters::tr(8, 8, 16, 3).unwrap();
        assert_eq!(tr.mode().unwrap(), OperatingMode::Tr);
        let qt = tr.reconfigure(ModeRequest::Qt { bitwidth: 8 }).unwrap();
        assert_eq!(qt.group_size, 1);
        assert_eq!(qt.hese_encoder_on, 0);
        assert_eq!(qt.comparator_on, 0);
        assert_eq!(qt.group_budget, 8);
        assert_eq!(qt.data_terms, 8);
    }

    #[test]
    fn switch_latency_accounting() {
        let mut c = Controller::new(ControlRegisters::qt(8).unwrap()).unwrap();
        assert_eq!(c.reconfigure(ModeRequest::Qt { bitwidth: 8 }).unwrap(), 0);
        let tr = ModeRequest::Tr {
            bitwidth: 8,
            group_size: 8,
            budget: 16,
            data_terms: 3,
        };
        assert_eq!(c.reconfigure(tr).unwrap(), DEFAULT_SWITCH_LATENCY);
        let mut c = c.with_switch_latency(4);
        assert_eq!(c.reconfigure(ModeRequest::Qt { bitwidth: 8 }).unwrap(), 4);
        assert_eq!(c.switch_cycles(), DEFAULT_SWITCH_LATENCY + 4);
    }

    #[test]
    fn invalid_registers() {
        assert!(ControlRegisters::tr(8, 9, 16, 3).is_err());
        assert!(ControlRegisters::tr(8, 8, 25, 3).is_err());
        assert!(ControlRegisters::tr(8, 1, 4, 3).is_err());
        assert!(ControlRegisters::qt(9).is_err());
        let mixed = ControlRegisters {
            hese_encoder_on: 1,
            comparator_on: 0,
            quant_bitwidth: 8,
            data_terms: 3,
            group_size: 4,
            group_budget: 6,
        };
        assert!(mixed.mode().is_err());
        let mut c = Controller::new(ControlRegisters::qt(8).unwrap()).unwrap();
        let before = c.registers();
        assert!(c
            .reconfigure(ModeRequest::Tr {
                bitwidth: 8,
                group_size: 9,
                budget: 4,
                data_terms: 2
            })
            .is_err());
        assert_eq!(c.registers(), before);
    }

    #[test]
    fn register_json_uses_table_names() {
        let r = ControlRegisters::tr(8, 8, 12, 3).unwrap();
        let json = serde_json::to_value(r).unwrap();
        for key in [
            "HESE_ENCODER_ON",
            "COMPARATOR_ON",
            "QUANT_BITWIDTH",
            "DATA_TERMS",
            "GROUP_SIZE",
            "GROUP_BUDGET",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back: ControlRegisters = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn pmac_group_counts() {
        let cost = CostModel::default();
        let r = simulate_group_pmac(3, &cost);
        assert_eq!((r.add8_count, r.acc32_count, r.cycles), (21, 3, 3));
        assert_eq!(r.work_units, 264.0);
        assert_eq!(simulate_group_pmac(8, &cost).cycles, 8);
        let r = simulate_group_pmac(1, &cost);
        assert_eq!((r.add8_count, r.acc32_count, r.cycles), (7, 1, 1));
    }

    #[test]
    fn tmac_group_counts() {
        let cost = CostModel::default();
        let r = simulate_group_tmac(8, 6, 2, false, &cost).unwrap();
        assert_eq!((r.cycles, r.term_pairs_total), (8, 8));
        let r = simulate_group_tmac(8, 6, 2, true, &cost).unwrap();
        assert_eq!(r.cycles, 12);
        assert_eq!(r.add3_count + r.bookkeeping_count, 24);
        assert_eq!(simulate_group_tmac(0, 6, 2, false, &cost).unwrap().cycles, 0);
        assert!(matches!(
            simulate_group_tmac(13, 6, 2, true, &cost),
            Err(Error::PairBoundExceeded { pairs: 13, bound: 12 })
        ));
    }

    #[test]
    fn ratio_examples() {
        let cost = CostModel::default();
        let p = simulate_group_pmac(3, &cost);
        let t = simulate_group_tmac(12, 6, 2, true, &cost).unwrap();
        assert!((work_ratio(&t, &p).unwrap() - 264.0 / 72.0).abs() < 1e-12);
        assert_eq!(work_ratio(&p, &p).unwrap(), 1.0);
        assert!(matches!(work_ratio(&WorkReport::default(), &p), Err(Error::ZeroWork)));
    }

    #[test]
    fn single_group_pmac() {
        let g = 5;
        let w = qm(1, g, vec![3, -4, 5, 0, 127]);
        let x = qm(g, 1, vec![1, 2, -3, 4, 5]);
        let cfg = ArrayConfig::pmac(4, 4, g, 8).unwrap();
        let run = simulate_matmul(&w, &x, &cfg).unwrap();
        assert_eq!(run.output.values, vec![3 - 8 - 15 + 635]);
        // one cell: fill of 1 plus g streaming cycles
        assert_eq!(run.report.cycles, g as u64 + 1);
        assert_eq!(run.report.add8_count, 7 * g as u64);
    }

    #[test]
    fn identity_weights_pass_data_through() {
        let n = 6;
        let mut id = vec![0; n * n];
        for i in 0..n {
            id[i * n + i] = 1;
        }
        let x: Vec<i32> = (0..n * 3).map(|i| i as i32 * 7 - 50).collect();
        let cfg = ArrayConfig::pmac(2, 4, 2, 8).unwrap();
        let run = simulate_matmul(&qm(n, n, id), &qm(n, 3, x.clone()), &cfg).unwrap();
        assert_eq!(run.output.values, x.iter().map(|&v| v as i64).collect::<Vec<_>>());
    }

    #[test]
    fn tmac_qt_mode_is_exact() {
        let w = qm(3, 5, vec![1, 2, 3, 4, 5, -6, 7, -8, 9, 10, 127, -127, 64, 0, 33]);
        let x = qm(5, 2, vec![1, -1, 2, 3, 127, 0, -5, 8, 16, 100]);
        let cfg = ArrayConfig::tmac(2, 2, ControlRegisters::qt(8).unwrap()).unwrap();
        let run = simulate_matmul(&w, &x, &cfg).unwrap();
        let wv: Vec<i64> = w.values().iter().map(|&v| v as i64).collect();
        let xv: Vec<i64> = x.values().iter().map(|&v| v as i64).collect();
        assert_eq!(run.output.values, crate::quant::integer_matmul(&wv, &xv, 3, 5, 2));
    }

    #[test]
    fn pmac_rejects_tr_registers() {
        let mut cfg = ArrayConfig::pmac(2, 2, 4, 8).unwrap();
        cfg.registers = ControlRegisters::tr(8, 4, 6, 2).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = ArrayConfig::pmac(2, 2, 4, 8).unwrap();
        assert!(simulate_matmul(&qm(2, 3, vec![0; 6]), &qm(2, 2, vec![0; 4]), &cfg).is_err());
    }

    #[test]
    fn weight_load_without_double_buffering() {
        let w = qm(2, 4, vec![1; 8]);
        let x = qm(4, 1, vec![1; 4]);
        let mut cfg = ArrayConfig::tmac(8, 8, ControlRegisters::tr(8, 2, 2, 2).unwrap()).unwrap();
        let a = simulate_matmul(&w, &x, &cfg).unwrap();
        cfg.double_buffered = false;
        let b = simulate_matmul(&w, &x, &cfg).unwrap();
        assert_eq!(b.report.cycles, a.report.cycles + 4);
    }
}
