//! Binary, Booth and HESE signed-digit encodings of small integers.
//!
//! Every encoder works on the magnitude and applies the sign of the input to
//! all emitted terms. Expansions are normalized to strictly descending
//! exponents regardless of the order in which digits were produced.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::QuantizedMatrix;

/// Widest input accepted by the encoders.
pub const MAX_ENCODE_BITS: u32 = 16;
/// Highest exponent searched by [`minimal_sdr_term_count`].
pub const ORACLE_MAX_EXPONENT: u32 = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn of(v: i64) -> Sign {
        if v < 0 {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }

    pub fn to_i64(self) -> i64 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// Sign of a product of two terms.
impl std::ops::Mul for Sign {
    type Output = Sign;

    fn mul(self, other: Sign) -> Sign {
        if self == other {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }
}

/// A signed power-of-two term `sign * 2^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedTerm {
    pub exponent: u8,
    pub sign: Sign,
}

impl SignedTerm {
    pub fn new(exponent: u8, sign: Sign) -> Self {
        Self { exponent, sign }
    }

    pub fn pos(exponent: u8) -> Self {
        Self::new(exponent, Sign::Pos)
    }

    pub fn neg(exponent: u8) -> Self {
        Self::new(exponent, Sign::Neg)
    }

    pub fn value(&self) -> i64 {
        self.sign.to_i64() << self.exponent
    }

    pub fn magnitude(&self) -> i64 {
        1i64 << self.exponent
    }
}

/// A value written as a sum of signed power-of-two terms with strictly
/// descending, distinct exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TermExpansion {
    terms: Vec<SignedTerm>,
}

impl TermExpansion {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds an expansion from terms in any order. Duplicate exponents are
    /// rejected.
    pub fn from_terms(mut terms: Vec<SignedTerm>) -> Result<Self> {
        terms.sort_by_key(|t| std::cmp::Reverse(t.exponent));
        if terms.windows(2).any(|w| w[0].exponent == w[1].exponent) {
            return Err(Error::InvalidConfig(
                "duplicate exponent in term expansion".into(),
            ));
        }
        Ok(Self { terms })
    }

    // Callers guarantee descending distinct exponents.
    pub(crate) fn from_sorted(terms: Vec<SignedTerm>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].exponent > w[1].exponent));
        Self { terms }
    }

    pub fn terms(&self) -> &[SignedTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self) -> i64 {
        self.terms.iter().map(SignedTerm::value).sum()
    }

    /// Sum of the absolute values of all terms.
    pub fn magnitude_sum(&self) -> i64 {
        self.terms.iter().map(SignedTerm::magnitude).sum()
    }

    pub fn negate(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| SignedTerm::new(t.exponent, t.sign.flip()))
                .collect(),
        }
    }

    /// The `n` highest-exponent terms.
    pub fn leading(&self, n: usize) -> Self {
        Self {
            terms: self.terms.iter().take(n).copied().collect(),
        }
    }

    pub fn max_exponent(&self) -> Option<u8> {
        self.terms.first().map(|t| t.exponent)
    }

    /// Digits in `{-1, 0, 1}`, MSB first, over `width` positions.
    pub fn digits_msb_first(&self, width: usize) -> Vec<i8> {
        let mut digits = vec![0i8; width];
        for t in &self.terms {
            let e = t.exponent as usize;
            if e < width {
                digits[width - 1 - e] = t.sign.to_i64() as i8;
            }
        }
        digits
    }

    /// Space-separated MSB-first digit string, wide enough for the top term.
    pub fn digit_string(&self) -> String {
        let width = self.max_exponent().map_or(1, |e| e as usize + 1);
        self.digits_msb_first(width)
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for TermExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let sym = match (i, t.sign) {
                (0, Sign::Pos) => "",
                (0, Sign::Neg) => "-",
                (_, Sign::Pos) => " + ",
                (_, Sign::Neg) => " - ",
            };
            write!(f, "{sym}2^{}", t.exponent)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Binary,
    Booth,
    Hese,
}

impl Encoding {
    pub const ALL: [Encoding; 3] = [Encoding::Binary, Encoding::Booth, Encoding::Hese];

    pub fn as_str(&self) -> &'static str {
        match self {
            Encoding::Binary => "binary",
            Encoding::Booth => "booth",
            Encoding::Hese => "hese",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "bin" => Ok(Encoding::Binary),
            "booth" | "booth4" | "radix4" => Ok(Encoding::Booth),
            "hese" => Ok(Encoding::Hese),
            other => Err(Error::InvalidConfig(format!("unknown encoding '{other}'"))),
        }
    }
}

fn check_width(v: i64, bits: u32) -> Result<u32> {
    if bits == 0 || bits > MAX_ENCODE_BITS || v.unsigned_abs() >= 1u64 << bits {
        return Err(Error::OutOfRange { value: v, bits });
    }
    Ok(v.unsigned_abs() as u32)
}

fn apply_sign(v: i64, e: TermExpansion) -> TermExpansion {
    if v < 0 {
        e.negate()
    } else {
        e
    }
}

/// Set bits of `|v|`, each carrying the sign of `v`.
pub fn binary_expand(v: i64) -> Result<TermExpansion> {
    if v.abs() > 255 {
        return Err(Error::OutOfRange { value: v, bits: 8 });
    }
    Ok(binary_expand_unchecked(v))
}

fn binary_expand_unchecked(v: i64) -> TermExpansion {
    let sign = Sign::of(v);
    let mag = v.unsigned_abs();
    let terms = (0..64u8)
        .rev()
        .filter(|&e| mag >> e & 1 == 1)
        .map(|e| SignedTerm::new(e, sign))
        .collect();
    TermExpansion::from_sorted(terms)
}

/// Booth radix-4 recoding of an `n`-bit magnitude. Each radix-4 digit in
/// `{-2, -1, 0, 1, 2}` becomes at most one term, so the result has at most
/// `n/2 + 1` terms.
pub fn booth_radix4_encode(v: i64, n: u32) -> Result<TermExpansion> {
    let mag = check_width(v, n)? as u64;
    let bit = |i: i64| -> i64 {
        if i < 0 {
            0
        } else {
            (mag >> i & 1) as i64
        }
    };
    let mut terms = Vec::new();
    let mut i = 0i64;
    while i <= n as i64 {
        let digit = bit(i) + bit(i - 1) - 2 * bit(i + 1);
        match digit {
            0 => {}
            1 | -1 => terms.push(SignedTerm::new(i as u8, Sign::of(digit))),
            2 | -2 => terms.push(SignedTerm::new(i as u8 + 1, Sign::of(digit))),
            _ => unreachable!("radix-4 digit out of range"),
        }
        i += 2;
    }
    terms.reverse();
    Ok(apply_sign(v, TermExpansion::from_sorted(terms)))
}

/// Radix-2 Booth recoding (`d_i = b_{i-1} - b_i`). Not minimal and not
/// bounded by `n/2 + 1`; kept for comparison with the textbook digit
/// strings.
pub fn booth_radix2_encode(v: i64, n: u32) -> Result<TermExpansion> {
    let mag = check_width(v, n)? as u64;
    let bit = |i: i64| -> i64 {
        if i < 0 {
            0
        } else {
            (mag >> i & 1) as i64
        }
    };
    let terms = (0..=n as i64)
        .rev()
        .filter_map(|i| {
            let d = bit(i - 1) - bit(i);
            (d != 0).then(|| SignedTerm::new(i as u8, Sign::of(d)))
        })
        .collect();
    Ok(apply_sign(v, TermExpansion::from_sorted(terms)))
}

/// Source of input bits for the HESE state machine, LSB first.
pub trait BitSource {
    /// Next input bit, or `None` once the input is consumed.
    fn next_bit(&mut self) -> Option<bool>;
}

/// The low `width` bits of a magnitude, LSB first.
#[derive(Clone, Debug)]
pub struct MagnitudeBits {
    value: u32,
    width: u32,
    pos: u32,
}

impl MagnitudeBits {
    pub fn new(value: u32, width: u32) -> Self {
        Self {
            value,
            width,
            pos: 0,
        }
    }
}

impl BitSource for MagnitudeBits {
    fn next_bit(&mut self) -> Option<bool> {
        if self.pos >= self.width {
            return None;
        }
        let b = self.value >> self.pos & 1 == 1;
        self.pos += 1;
        Some(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeseMode {
    NotInRun,
    InRun,
}

/// One-pass HESE encoder. The state is the pair (current bit, next bit)
/// plus the run mode; every transition consumes one input bit and emits one
/// signed digit. A trailing digit is flushed if the input ends inside a run.
///
/// Runs of two or more 1s are rewritten Booth-style (`0111 -> 100-1`), and an
/// isolated 0 inside a run becomes `-1` while the run continues
/// (`11011 -> 100-10-1`). Isolated 1s pass through unchanged.
#[derive(Debug)]
pub struct HeseEncoder<S> {
    source: S,
    mode: HeseMode,
    current: Option<bool>,
    lookahead: Option<bool>,
    position: u32,
}

impl<S: BitSource> HeseEncoder<S> {
    pub fn new(mut source: S) -> Self {
        let current = source.next_bit();
        let lookahead = if current.is_some() {
            source.next_bit()
        } else {
            None
        };
        Self {
            source,
            mode: HeseMode::NotInRun,
            current,
            lookahead,
            position: 0,
        }
    }

    pub fn mode(&self) -> HeseMode {
        self.mode
    }

    pub fn into_source(self) -> S {
        self.source
    }

    fn transition(mode: HeseMode, bit: bool, next: bool) -> (i8, HeseMode) {
        use HeseMode::*;
        match (mode, bit, next) {
            (NotInRun, false, _) => (0, NotInRun),
            (NotInRun, true, false) => (1, NotInRun),
            (NotInRun, true, true) => (-1, InRun),
            (InRun, true, _) => (0, InRun),
            (InRun, false, true) => (-1, InRun),
            (InRun, false, false) => (1, NotInRun),
        }
    }
}

impl<S: BitSource> Iterator for HeseEncoder<S> {
    /// `(position, digit)` in LSB-first order.
    type Item = (u32, i8);

    fn next(&mut self) -> Option<Self::Item> {
        let bit = match (self.current, self.mode) {
            (Some(b), _) => b,
            // input consumed inside a run: flush the carry-out digit
            (None, HeseMode::InRun) => false,
            (None, HeseMode::NotInRun) => return None,
        };
        let next = self.lookahead.unwrap_or(false);
        let (digit, mode) = Self::transition(self.mode, bit, next);
        self.mode = mode;
        let pos = self.position;
        self.position += 1;
        self.current = self.lookahead;
        self.lookahead = if self.current.is_some() {
            self.source.next_bit()
        } else {
            None
        };
        Some((pos, digit))
    }
}

/// Minimum-term signed-digit encoding of an `n`-bit magnitude via the HESE
/// state machine.
pub fn hese_encode(v: i64, n: u32) -> Result<TermExpansion> {
    let mag = check_width(v, n)?;
    Ok(hese_from_source(v, MagnitudeBits::new(mag, n)))
}

pub(crate) fn hese_from_source<S: BitSource>(v: i64, source: S) -> TermExpansion {
    let mut terms: Vec<SignedTerm> = HeseEncoder::new(source)
        .filter(|&(_, d)| d != 0)
        .map(|(pos, d)| SignedTerm::new(pos as u8, Sign::of(d as i64)))
        .collect();
    terms.reverse();
    apply_sign(v, TermExpansion::from_sorted(terms))
}

/// Dispatch to the encoder for `encoding` over an `n`-bit input.
pub fn encode(v: i64, encoding: Encoding, n: u32) -> Result<TermExpansion> {
    match encoding {
        Encoding::Binary => {
            check_width(v, n)?;
            Ok(binary_expand_unchecked(v))
        }
        Encoding::Booth => booth_radix4_encode(v, n),
        Encoding::Hese => hese_encode(v, n),
    }
}

/// Parallel magnitude and sign bit streams, stored LSB first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitStream {
    magnitude: Vec<bool>,
    sign: Vec<bool>,
}

impl DigitStream {
    pub fn new(magnitude: Vec<bool>, sign: Vec<bool>) -> Result<Self> {
        if magnitude.len() != sign.len() {
            return Err(Error::InvalidConfig(
                "magnitude and sign streams differ in length".into(),
            ));
        }
        if magnitude.iter().zip(&sign).any(|(&m, &s)| s && !m) {
            return Err(Error::InvalidConfig(
                "sign bit set on a zero digit".into(),
            ));
        }
        Ok(Self { magnitude, sign })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            magnitude: vec![false; len],
            sign: vec![false; len],
        }
    }

    /// Serializes an expansion over `len` positions. Terms at or above `len`
    /// are rejected.
    pub fn from_expansion(e: &TermExpansion, len: usize) -> Result<Self> {
        let mut s = Self::zeros(len);
        for t in e.terms() {
            let i = t.exponent as usize;
            if i >= len {
                return Err(Error::OutOfRange {
                    value: e.value(),
                    bits: len as u32,
                });
            }
            s.magnitude[i] = true;
            s.sign[i] = t.sign == Sign::Neg;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.magnitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitude.is_empty()
    }

    pub fn magnitude_bits(&self) -> &[bool] {
        &self.magnitude
    }

    pub fn sign_bits(&self) -> &[bool] {
        &self.sign
    }

    /// Digit at LSB-first position `i`.
    pub fn digit(&self, i: usize) -> i8 {
        match (self.magnitude[i], self.sign[i]) {
            (false, _) => 0,
            (true, false) => 1,
            (true, true) => -1,
        }
    }

    pub fn clear(&mut self, i: usize) {
        self.magnitude[i] = false;
        self.sign[i] = false;
    }

    pub fn nonzero_count(&self) -> usize {
        self.magnitude.iter().filter(|&&m| m).count()
    }

    pub fn to_expansion(&self) -> TermExpansion {
        let terms = (0..self.len())
            .rev()
            .filter(|&i| self.magnitude[i])
            .map(|i| {
                let sign = if self.sign[i] { Sign::Neg } else { Sign::Pos };
                SignedTerm::new(i as u8, sign)
            })
            .collect();
        TermExpansion::from_sorted(terms)
    }

    pub fn decode(&self) -> i64 {
        self.to_expansion().value()
    }

    fn bits_msb_first(bits: &[bool], width: usize) -> String {
        (0..width)
            .rev()
            .map(|i| if bits.get(i).copied().unwrap_or(false) { '1' } else { '0' })
            .collect()
    }

    /// Low `width` magnitude bits, printed MSB first.
    pub fn magnitude_string(&self, width: usize) -> String {
        Self::bits_msb_first(&self.magnitude, width)
    }

    /// Low `width` sign bits, printed MSB first.
    pub fn sign_string(&self, width: usize) -> String {
        Self::bits_msb_first(&self.sign, width)
    }
}

/// HESE output as magnitude/sign streams over `n + 1` positions (the extra
/// position holds the carry-out digit).
pub fn hese_streams(v: i64, n: u32) -> Result<DigitStream> {
    let e = hese_encode(v, n)?;
    DigitStream::from_expansion(&e, n as usize + 1)
}

/// Fewest nonzero digits over all signed-digit representations of `v` with
/// digits in `{-1, 0, 1}` and exponents `0..=15`.
///
/// Depth-first search from the LSB: an even remainder forces a zero digit,
/// an odd one branches on `+1` / `-1`. Branches that cannot beat the best
/// count found so far are cut.
///
/// # Panics
///
/// If `|v| > 2^15`.
pub fn minimal_sdr_term_count(v: i64) -> u32 {
    assert!(v.unsigned_abs() <= 1 << ORACLE_MAX_EXPONENT, "oracle input out of range");
    fn search(rest: i64, pos: u32, used: u32, best: &mut u32) {
        if used >= *best {
            return;
        }
        if rest == 0 {
            *best = used;
            return;
        }
        if pos > ORACLE_MAX_EXPONENT || used + 1 >= *best {
            return;
        }
        if rest % 2 == 0 {
            search(rest / 2, pos + 1, used, best);
        } else {
            search((rest - 1) / 2, pos + 1, used + 1, best);
            search((rest + 1) / 2, pos + 1, used + 1, best);
        }
    }
    let mut best = u32::MAX;
    search(v.abs(), 0, 0, &mut best);
    best
}

/// Fraction of matrix elements per term count under `encoding`.
pub fn term_count_histogram(m: &QuantizedMatrix, encoding: Encoding) -> BTreeMap<usize, f64> {
    let n = m.scheme().bitwidth();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in m.values() {
        let e = encode(v as i64, encoding, n).expect("quantized values fit their bitwidth");
        *counts.entry(e.len()).or_default() += 1;
    }
    let total = m.values().len() as f64;
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::QuantScheme;
    use proptest::prelude::*;

    fn digits(e: &TermExpansion, width: usize) -> Vec<i8> {
        e.digits_msb_first(width)
    }

    #[test]
    fn binary_examples() {
        let e = binary_expand(5).unwrap();
        assert_eq!(e.terms(), &[SignedTerm::pos(2), SignedTerm::pos(0)]);
        let e = binary_expand(127).unwrap();
        assert_eq!(e.len(), 7);
        assert!(e.terms().iter().rev().enumerate().all(|(i, t)| t.exponent as usize == i));
        assert!(binary_expand(0).unwrap().is_empty());
        assert_eq!(binary_expand(-6).unwrap().value(), -6);
        assert!(binary_expand(256).is_err());
    }

    #[test]
    fn booth_examples() {
        let e = booth_radix4_encode(30, 8).unwrap();
        assert_eq!(e.terms(), &[SignedTerm::pos(5), SignedTerm::neg(1)]);
        assert!(booth_radix4_encode(0, 8).unwrap().is_empty());
        let e = booth_radix4_encode(27, 8).unwrap();
        assert_eq!(e.value(), 27);
        assert!(booth_radix4_encode(256, 8).is_err());
    }

    #[test]
    fn booth_radix2_textbook_strings() {
        let e = booth_radix2_encode(27, 8).unwrap();
        assert_eq!(digits(&e, 6), vec![1, 0, -1, 1, 0, -1]);
        let e = booth_radix2_encode(30, 8).unwrap();
        assert_eq!(e.terms(), &[SignedTerm::pos(5), SignedTerm::neg(1)]);
    }

    #[test]
    fn hese_examples() {
        let e = hese_encode(27, 8).unwrap();
        assert_eq!(digits(&e, 6), vec![1, 0, 0, -1, 0, -1]);
        let e = hese_encode(31, 8).unwrap();
        assert_eq!(e.terms(), &[SignedTerm::pos(5), SignedTerm::neg(0)]);
        let e = hese_encode(5, 8).unwrap();
        assert_eq!(e.terms(), &[SignedTerm::pos(2), SignedTerm::pos(0)]);
        // a run of five 1s collapses to two terms
        let e = hese_encode(0b11111, 8).unwrap();
        assert_eq!(digits(&e, 6), vec![1, 0, 0, 0, 0, -1]);
        assert_eq!(hese_encode(-27, 8).unwrap().value(), -27);
        assert!(hese_encode(256, 8).is_err());
    }

    #[test]
    fn hese_stream_example() {
        let s = hese_streams(31, 8).unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s.magnitude_string(8), "00100001");
        assert_eq!(s.sign_string(8), "00000001");
        assert_eq!(s.magnitude_string(9), "000100001");
        let z = hese_streams(0, 8).unwrap();
        assert_eq!(z.nonzero_count(), 0);
        // carry-out position is used by long runs at the top
        let s = hese_streams(255, 8).unwrap();
        assert_eq!(s.digit(8), 1);
        assert_eq!(s.decode(), 255);
    }

    #[test]
    fn streams_round_trip_exhaustive() {
        for v in -255..=255 {
            assert_eq!(hese_streams(v, 8).unwrap().decode(), v);
        }
    }

    #[test]
    fn stream_rejects_sign_without_magnitude() {
        assert!(DigitStream::new(vec![false], vec![true]).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(minimal_sdr_term_count(27), 3);
        assert_eq!(minimal_sdr_term_count(0), 0);
        assert_eq!(minimal_sdr_term_count(255), 2);
        assert_eq!(minimal_sdr_term_count(-255), 2);
        assert_eq!(minimal_sdr_term_count(1 << 15), 1);
    }

    /// Plain enumeration of every digit vector over exponents 0..=8.
    #[test]
    fn oracle_matches_enumeration_for_small_values() {
        let mut best = BTreeMap::new();
        let positions = 9u32;
        for code in 0..3u32.pow(positions) {
            let (mut c, mut value, mut weight) = (code, 0i64, 0u32);
            for p in 0..positions {
                let d = (c % 3) as i64 - 1;
                c /= 3;
                value += d << p;
                weight += (d != 0) as u32;
            }
            let slot = best.entry(value).or_insert(u32::MAX);
            *slot = (*slot).min(weight);
        }
        for v in -127..=127i64 {
            assert_eq!(minimal_sdr_term_count(v), best[&v], "v = {v}");
        }
    }

    struct CountingBits {
        inner: MagnitudeBits,
        reads: u32,
    }

    impl BitSource for CountingBits {
        fn next_bit(&mut self) -> Option<bool> {
            let b = self.inner.next_bit();
            if b.is_some() {
                self.reads += 1;
            }
            b
        }
    }

    #[test]
    fn hese_consumes_each_bit_once() {
        for v in 0..256u32 {
            let src = CountingBits {
                inner: MagnitudeBits::new(v, 8),
                reads: 0,
            };
            let mut enc = HeseEncoder::new(src);
            let emitted = enc.by_ref().count();
            assert!(emitted == 8 || emitted == 9);
            assert_eq!(enc.into_source().reads, 8);
        }
    }

    #[test]
    fn histogram_cases() {
        let s = QuantScheme::new(8, 0).unwrap();
        let zeros = QuantizedMatrix::new(2, 2, vec![0; 4], s).unwrap();
        let h = term_count_histogram(&zeros, Encoding::Hese);
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
        let full = QuantizedMatrix::new(1, 3, vec![127; 3], s).unwrap();
        let h = term_count_histogram(&full, Encoding::Binary);
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(7, 1.0)]);
    }

    #[test]
    fn encoding_parse() {
        assert_eq!("HESE".parse::<Encoding>().unwrap(), Encoding::Hese);
        assert!("radix8".parse::<Encoding>().is_err());
    }

    proptest! {
        #[test]
        fn all_encodings_reconstruct(v in -65535i64..=65535) {
            for enc in Encoding::ALL {
                let e = encode(v, enc, 16).unwrap();
                prop_assert_eq!(e.value(), v);
                prop_assert!(e.terms().windows(2).all(|w| w[0].exponent > w[1].exponent));
            }
        }

        #[test]
        fn booth_term_bound(n in 1u32..=16, raw in 0u64..65536) {
            let v = (raw % (1 << n)) as i64;
            let e = booth_radix4_encode(v, n).unwrap();
            prop_assert!(e.len() as u32 <= n / 2 + 1);
        }

        #[test]
        fn hese_minimal_wide(v in -32767i64..=32767) {
            prop_assert_eq!(hese_encode(v, 16).unwrap().len() as u32, minimal_sdr_term_count(v));
        }
    }
}
