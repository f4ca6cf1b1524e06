//! Group-based term revealing: keep the `k` largest terms across each group
//! of `g` consecutive values.

use crate::error::{Error, Result};
use crate::sdr::{encode, Encoding, TermExpansion};

/// Largest group size the hardware registers can hold.
pub const HARDWARE_MAX_GROUP: usize = 8;
/// Largest group budget the hardware registers can hold (`8 x 3`).
pub const HARDWARE_MAX_BUDGET: usize = 24;
/// Largest group size accepted by the analytics paths.
pub const ANALYTICS_MAX_GROUP: usize = 64;

/// Group size `g` and the shared term budget `k` of a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupBudget {
    group_size: usize,
    budget: usize,
}

impl GroupBudget {
    /// Budget within the hardware register limits (`g <= 8`, `k <= 24`).
    pub fn hardware(group_size: usize, budget: usize) -> Result<Self> {
        if !(1..=HARDWARE_MAX_GROUP).contains(&group_size) {
            return Err(Error::InvalidGroupSize(group_size));
        }
        if !(1..=HARDWARE_MAX_BUDGET).contains(&budget) {
            return Err(Error::InvalidBudget(budget));
        }
        Ok(Self { group_size, budget })
    }

    /// Budget for offline analysis: `g <= 64`, any positive `k`. A budget
    /// above the number of terms a group can hold simply never prunes.
    pub fn analytics(group_size: usize, budget: usize) -> Result<Self> {
        if !(1..=ANALYTICS_MAX_GROUP).contains(&group_size) {
            return Err(Error::InvalidGroupSize(group_size));
        }
        if budget == 0 {
            return Err(Error::InvalidBudget(budget));
        }
        Ok(Self { group_size, budget })
    }

    /// `k = round(alpha * g)`, at least 1. Ties go to the smaller budget so
    /// `k / g` never exceeds `alpha` (g=1, alpha=1.5 gives k=1).
    pub fn from_alpha(group_size: usize, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha}")));
        }
        let k = ((alpha * group_size as f64 - 0.5).ceil() as usize).max(1);
        Self::analytics(group_size, k)
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Average budgeted terms per value, `k / g`.
    pub fn alpha(&self) -> f64 {
        self.budget as f64 / self.group_size as f64
    }
}

/// `g` consecutive values in term form, in their original order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermGroup {
    expansions: Vec<TermExpansion>,
}

impl TermGroup {
    pub fn new(expansions: Vec<TermExpansion>) -> Self {
        Self { expansions }
    }

    pub fn expansions(&self) -> &[TermExpansion] {
        &self.expansions
    }

    pub fn len(&self) -> usize {
        self.expansions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expansions.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.expansions.iter().map(TermExpansion::len).sum()
    }

    pub fn values(&self) -> Vec<i64> {
        self.expansions.iter().map(TermExpansion::value).collect()
    }

    pub fn into_expansions(self) -> Vec<TermExpansion> {
        self.expansions
    }
}

/// Output of [`receding_water_select`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevealResult {
    pub kept: TermGroup,
    pub pruned_term_count: usize,
    /// Exponent level at which the budget ran out; `None` if nothing was
    /// pruned.
    pub waterline_exponent: Option<u8>,
}

/// Consecutive groups plus the number of zero expansions appended to fill
/// the last one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub groups: Vec<TermGroup>,
    pub padding: usize,
}

fn partition(vector: &[TermExpansion], g: usize, max: usize) -> Result<Partition> {
    if !(1..=max).contains(&g) {
        return Err(Error::InvalidGroupSize(g));
    }
    let padding = (g - vector.len() % g) % g;
    let groups = vector
        .chunks(g)
        .map(|chunk| {
            let mut e = chunk.to_vec();
            e.resize(g, TermExpansion::zero());
            TermGroup::new(e)
        })
        .collect();
    Ok(Partition { groups, padding })
}

/// Split into groups of `g <= 8`, zero-padding the tail.
pub fn partition_into_groups(vector: &[TermExpansion], g: usize) -> Result<Partition> {
    partition(vector, g, HARDWARE_MAX_GROUP)
}

/// As [`partition_into_groups`] but with the analytics limit `g <= 64`.
pub fn partition_into_groups_analytics(vector: &[TermExpansion], g: usize) -> Result<Partition> {
    partition(vector, g, ANALYTICS_MAX_GROUP)
}

/// Receding-water top-`k` selection.
///
/// Exponent levels are scanned from the highest present down to `2^0`;
/// within a level values are visited in group order. Terms are kept until
/// `k` have been taken and everything after is pruned, so each value keeps a
/// prefix of its own expansion.
pub fn receding_water_select(group: &TermGroup, k: usize) -> Result<RevealResult> {
    if k == 0 {
        return Err(Error::InvalidBudget(k));
    }
    let total = group.term_count();
    if total <= k {
        return Ok(RevealResult {
            kept: group.clone(),
            pruned_term_count: 0,
            waterline_exponent: None,
        });
    }
    let top = group
        .expansions()
        .iter()
        .filter_map(TermExpansion::max_exponent)
        .max()
        .unwrap_or(0);
    let mut cursor = vec![0usize; group.len()];
    let mut taken = 0;
    let mut waterline = None;
    'levels: for level in (0..=top).rev() {
        for (i, e) in group.expansions().iter().enumerate() {
            if e.terms().get(cursor[i]).is_some_and(|t| t.exponent == level) {
                cursor[i] += 1;
                taken += 1;
                if taken == k {
                    waterline = Some(level);
                    break 'levels;
                }
            }
        }
    }
    let kept = group
        .expansions()
        .iter()
        .zip(&cursor)
        .map(|(e, &n)| e.leading(n))
        .collect();
    Ok(RevealResult {
        kept: TermGroup::new(kept),
        pruned_term_count: total - k,
        waterline_exponent: waterline,
    })
}

/// Keep the `s` highest-exponent terms of a data value.
pub fn truncate_data_terms(x: &TermExpansion, s: usize) -> TermExpansion {
    x.leading(s)
}

/// Pruned term mass over original term mass, `sum|pruned| / sum|original|`.
/// Zero for groups without terms.
pub fn relative_truncation_error(before: &TermGroup, after: &TermGroup) -> Result<f64> {
    if before.len() != after.len() {
        return Err(Error::ShapeMismatch {
            expected: (before.len(), 1),
            actual: (after.len(), 1),
        });
    }
    let total: i64 = before.expansions().iter().map(TermExpansion::magnitude_sum).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let kept: i64 = after.expansions().iter().map(TermExpansion::magnitude_sum).sum();
    Ok((total - kept) as f64 / total as f64)
}

/// Relative change of one value, `(x - x') / x`; zero when `x = 0`.
pub fn value_relative_error(before: &TermExpansion, after: &TermExpansion) -> f64 {
    let x = before.value();
    if x == 0 {
        0.0
    } else {
        (x - after.value()) as f64 / x as f64
    }
}

/// A row of integers after encoding and term revealing.
#[derive(Clone, Debug, PartialEq)]
pub struct RevealedRow {
    pub expansions: Vec<TermExpansion>,
    pub values: Vec<i64>,
    pub pruned_terms: usize,
    /// Relative truncation error of each group.
    pub group_sigmas: Vec<f64>,
}

/// Encode `values` with `bits`-bit `encoding` and apply term revealing group
/// by group. Padding is dropped from the output.
pub fn reveal_row(
    values: &[i32],
    encoding: Encoding,
    bits: u32,
    budget: GroupBudget,
) -> Result<RevealedRow> {
    let expansions = values
        .iter()
        .map(|&v| encode(v as i64, encoding, bits))
        .collect::<Result<Vec<_>>>()?;
    let parts = partition_into_groups_analytics(&expansions, budget.group_size())?;
    let mut out = Vec::with_capacity(values.len() + parts.padding);
    let mut pruned_terms = 0;
    let mut group_sigmas = Vec::with_capacity(parts.groups.len());
    for group in &parts.groups {
        let r = receding_water_select(group, budget.budget())?;
        group_sigmas.push(relative_truncation_error(group, &r.kept)?);
        pruned_terms += r.pruned_term_count;
        out.extend(r.kept.into_expansions());
    }
    out.truncate(values.len());
    Ok(RevealedRow {
        values: out.iter().map(TermExpansion::value).collect(),
        expansions: out,
        pruned_terms,
        group_sigmas,
    })
}
