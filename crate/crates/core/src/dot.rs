//! Behavioral model of the term MAC datapath.
//!
//! A dot product over a group is computed as a sequence of term pair
//! multiplications. Each pair adds its exponents and bumps one counter of a
//! fifteen-entry coefficient vector; the vector is reduced to an integer at
//! the array output.

use crate::error::{Error, Result};
use crate::reveal::TermGroup;
use crate::sdr::{DigitStream, Sign, SignedTerm, TermExpansion};

/// Number of coefficients, one per product exponent `0..=14`.
pub const COEFFICIENT_LEN: usize = 15;
pub const COUNTER_BITS: u32 = 12;
pub const COUNTER_MAX: i32 = (1 << (COUNTER_BITS - 1)) - 1;
pub const COUNTER_MIN: i32 = -(1 << (COUNTER_BITS - 1));

/// One weight term times one data term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermPair {
    pub weight: SignedTerm,
    pub data: SignedTerm,
}

impl TermPair {
    pub fn new(weight: SignedTerm, data: SignedTerm) -> Result<Self> {
        let e = weight.exponent as usize + data.exponent as usize;
        if e >= COEFFICIENT_LEN {
            return Err(Error::OutOfRange {
                value: 1i64 << e,
                bits: COEFFICIENT_LEN as u32,
            });
        }
        Ok(Self { weight, data })
    }

    pub fn product_exponent(&self) -> usize {
        self.weight.exponent as usize + self.data.exponent as usize
    }

    pub fn product_sign(&self) -> Sign {
        self.weight.sign * self.data.sign
    }
}

/// Fifteen 12-bit signed counters; entry `i` counts multiples of `2^i`.
///
/// A counter that would leave the 12-bit range folds two units into one unit
/// of the next exponent, so the represented value is always exact. Only an
/// overflow of the `2^14` counter is an error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CoefficientVector {
    coefficients: [i32; COEFFICIENT_LEN],
}

impl CoefficientVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Coefficients indexed by exponent, LSB first.
    pub fn from_coefficients(coefficients: &[i32]) -> Result<Self> {
        if coefficients.len() > COEFFICIENT_LEN {
            return Err(Error::InvalidConfig(format!(
                "{} coefficients, at most {COEFFICIENT_LEN}",
                coefficients.len()
            )));
        }
        if let Some(exponent) = coefficients
            .iter()
            .position(|c| !(COUNTER_MIN..=COUNTER_MAX).contains(c))
        {
            return Err(Error::CounterOverflow { exponent });
        }
        let mut cv = Self::default();
        cv.coefficients[..coefficients.len()].copy_from_slice(coefficients);
        Ok(cv)
    }

    pub fn coefficients(&self) -> &[i32; COEFFICIENT_LEN] {
        &self.coefficients
    }

    pub fn get(&self, exponent: usize) -> i32 {
        self.coefficients[exponent]
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }

    fn add_at(&mut self, exponent: usize, delta: i32) -> Result<()> {
        let c = self.coefficients[exponent] + delta;
        let carry = if c > COUNTER_MAX {
            1
        } else if c < COUNTER_MIN {
            -1
        } else {
            0
        };
        if carry == 0 {
            self.coefficients[exponent] = c;
            return Ok(());
        }
        if exponent + 1 == COEFFICIENT_LEN {
            return Err(Error::CounterOverflow { exponent });
        }
        self.coefficients[exponent] = c - 2 * carry;
        self.add_at(exponent + 1, carry)
    }

    /// Add or subtract one at the pair's product exponent. The vector is
    /// left unchanged if the top counter would overflow.
    pub fn accumulate(&mut self, pair: TermPair) -> Result<()> {
        let mut next = *self;
        next.add_at(pair.product_exponent(), pair.product_sign().to_i64() as i32)?;
        *self = next;
        Ok(())
    }

    /// `sum(coefficients[i] * 2^i)`.
    pub fn value(&self) -> i64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| (c as i64) << i)
            .sum()
    }
}

/// Binary stream converter: reduce a coefficient vector to an integer.
pub fn coefficient_to_integer(cv: &CoefficientVector) -> i64 {
    cv.value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DotResult {
    pub value: i64,
    pub term_pairs_processed: u64,
    /// One term pair per cycle.
    pub cycles: u64,
}

fn check_lengths(w_group: &TermGroup, x_group: &[TermExpansion]) -> Result<()> {
    if w_group.len() != x_group.len() {
        return Err(Error::ShapeMismatch {
            expected: (w_group.len(), 1),
            actual: (x_group.len(), 1),
        });
    }
    Ok(())
}

/// Pair schedule of the exponent duplicator: for each value, every data
/// term is repeated once per weight term of the same value.
pub fn pair_schedule<'a>(
    w_group: &'a TermGroup,
    x_group: &'a [TermExpansion],
) -> impl Iterator<Item = (SignedTerm, SignedTerm)> + 'a {
    w_group
        .expansions()
        .iter()
        .zip(x_group)
        .flat_map(|(w, x)| {
            x.terms()
                .iter()
                .flat_map(move |&d| w.terms().iter().map(move |&t| (t, d)))
        })
}

/// Accumulate every term pair of the group into `initial`.
pub fn dot_product_terms(
    w_group: &TermGroup,
    x_group: &[TermExpansion],
    initial: CoefficientVector,
) -> Result<(CoefficientVector, DotResult)> {
    check_lengths(w_group, x_group)?;
    let mut cv = initial;
    let mut pairs = 0u64;
    for (w, d) in pair_schedule(w_group, x_group) {
        cv.accumulate(TermPair::new(w, d)?)?;
        pairs += 1;
    }
    let result = DotResult {
        value: cv.value(),
        term_pairs_processed: pairs,
        cycles: pairs,
    };
    Ok((cv, result))
}

/// `sum(r_i * k_i)`: weight terms times data terms, value by value.
pub fn count_term_pairs(w_group: &TermGroup, x_group: &[TermExpansion]) -> usize {
    w_group
        .expansions()
        .iter()
        .zip(x_group)
        .map(|(w, x)| w.len() * x.len())
        .sum()
}

pub fn relu(v: i64) -> i64 {
    v.max(0)
}

/// Streaming top-`k` term comparator.
///
/// Streams enter MSB first. Each group of `g` consecutive streams has an
/// accumulate-and-compare counter; at every time step the counter adds the
/// nonzero digits of its streams in stream order and zeroes any digit that
/// arrives after the budget is spent.
#[derive(Clone, Debug)]
pub struct TermComparator {
    group_size: usize,
    budget: usize,
}

/// Comparator output with the time step (1-based, MSB first) at which each
/// group's budget was reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparatorTrace {
    pub streams: Vec<DigitStream>,
    pub budget_reached_at: Vec<Option<usize>>,
}

impl TermComparator {
    pub fn new(group_size: usize, budget: usize) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::InvalidGroupSize(group_size));
        }
        if budget == 0 {
            return Err(Error::InvalidBudget(budget));
        }
        Ok(Self { group_size, budget })
    }

    pub fn run(&self, streams: &[DigitStream]) -> Result<ComparatorTrace> {
        if !streams.len().is_multiple_of(self.group_size) {
            return Err(Error::InvalidGroupSize(self.group_size));
        }
        let len = streams.first().map_or(0, DigitStream::len);
        if streams.iter().any(|s| s.len() != len) {
            return Err(Error::InvalidConfig("streams differ in length".into()));
        }
        let mut out = streams.to_vec();
        let mut reached = Vec::with_capacity(streams.len() / self.group_size);
        for group in out.chunks_mut(self.group_size) {
            let mut count = 0usize;
            let mut at = None;
            for t in 0..len {
                let pos = len - 1 - t;
                for s in group.iter_mut() {
                    if s.digit(pos) == 0 {
                        continue;
                    }
                    if count < self.budget {
                        count += 1;
                        if count == self.budget {
                            at = Some(t + 1);
                        }
                    } else {
                        s.clear(pos);
                    }
                }
            }
            reached.push(at);
        }
        Ok(ComparatorTrace {
            streams: out,
            budget_reached_at: reached,
        })
    }
}

/// Zero every digit past the `k`-th nonzero one within each group of `g`
/// MSB-first streams.
pub fn streaming_term_select(streams: &[DigitStream], g: usize, k: usize) -> Result<Vec<DigitStream>> {
    Ok(TermComparator::new(g, k)?.run(streams)?.streams)
}
