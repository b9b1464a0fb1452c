//! Signed fixed-point numbers and the saturating arithmetic unit of a PE core.
//!
//! Every numeric quantity the simulator stores in memory (weights, membrane
//! potentials, gating variables, LUT rows) is a [`Fixed`] in some
//! [`QFormat`]. Raw values always fit in one 32-bit memory word.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer/fraction split of a signed fixed-point format (sign bit implicit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFormat {
    pub int_bits: u8,
    pub frac_bits: u8,
}

impl QFormat {
    pub const Q15_16: QFormat = QFormat {
        int_bits: 15,
        frac_bits: 16,
    };

    pub fn new(int_bits: u8, frac_bits: u8) -> Result<Self> {
        if int_bits as u32 + frac_bits as u32 > 31 {
            return Err(Error::Config(format!(
                "fixed-point format Q{int_bits}.{frac_bits} does not fit a 32-bit word"
            )));
        }
        if frac_bits == 0 {
            return Err(Error::Config("fixed-point format needs at least one fractional bit".into()));
        }
        Ok(QFormat { int_bits, frac_bits })
    }

    #[inline]
    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.int_bits + self.frac_bits))
    }

    #[inline]
    pub fn max_raw(self) -> i64 {
        (1i64 << (self.int_bits + self.frac_bits)) - 1
    }

    #[inline]
    pub fn one_raw(self) -> i64 {
        1i64 << self.frac_bits
    }

    /// Value of one least-significant bit.
    pub fn lsb(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_value(self) -> f64 {
        self.min_raw() as f64 * self.lsb()
    }

    pub fn max_value(self) -> f64 {
        self.max_raw() as f64 * self.lsb()
    }
}

impl Default for QFormat {
    fn default() -> Self {
        QFormat::Q15_16
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fixed {
    raw: i64,
    fmt: QFormat,
}

impl Fixed {
    /// Round-to-nearest-even conversion. Values outside the format are an error.
    pub fn from_f64(x: f64, fmt: QFormat) -> Result<Self> {
        let scaled = (x * fmt.one_raw() as f64).round_ties_even();
        if !scaled.is_finite() || scaled < fmt.min_raw() as f64 || scaled > fmt.max_raw() as f64 {
            return Err(Error::Range {
                value: x,
                min: fmt.min_value(),
                max: fmt.max_value(),
            });
        }
        Ok(Fixed {
            raw: scaled as i64,
            fmt,
        })
    }

    /// Like [`Fixed::from_f64`] but clips to the format; the flag reports clipping.
    pub fn saturating_from_f64(x: f64, fmt: QFormat) -> (Self, bool) {
        let scaled = (x * fmt.one_raw() as f64).round_ties_even();
        if scaled.is_nan() {
            return (Fixed::zero(fmt), true);
        }
        let clipped = scaled.clamp(fmt.min_raw() as f64, fmt.max_raw() as f64);
        (
            Fixed {
                raw: clipped as i64,
                fmt,
            },
            clipped != scaled,
        )
    }

    pub fn from_raw(raw: i64, fmt: QFormat) -> Result<Self> {
        if raw < fmt.min_raw() || raw > fmt.max_raw() {
            return Err(Error::Range {
                value: raw as f64 * fmt.lsb(),
                min: fmt.min_value(),
                max: fmt.max_value(),
            });
        }
        Ok(Fixed { raw, fmt })
    }

    /// Clamps `raw` into range, returning whether it had to.
    pub fn from_raw_saturating(raw: i128, fmt: QFormat) -> (Self, bool) {
        let lo = fmt.min_raw() as i128;
        let hi = fmt.max_raw() as i128;
        let clipped = raw.clamp(lo, hi);
        (
            Fixed {
                raw: clipped as i64,
                fmt,
            },
            clipped != raw,
        )
    }

    pub fn zero(fmt: QFormat) -> Self {
        Fixed { raw: 0, fmt }
    }

    pub fn one(fmt: QFormat) -> Self {
        Fixed {
            raw: fmt.one_raw(),
            fmt,
        }
    }

    #[inline]
    pub fn raw(self) -> i64 {
        self.raw
    }

    #[inline]
    pub fn format(self) -> QFormat {
        self.fmt
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 * self.fmt.lsb()
    }

    /// Two's-complement encoding in one memory word.
    #[inline]
    pub fn to_word(self) -> u32 {
        self.raw as i32 as u32
    }

    /// Decodes a word written by [`Fixed::to_word`]; bits above the format are
    /// sign-extended away.
    #[inline]
    pub fn from_word(word: u32, fmt: QFormat) -> Self {
        Fixed {
            raw: word as i32 as i64,
            fmt,
        }
    }
}

/// Values of different formats are unordered.
impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        (self.fmt == other.fmt).then(|| self.raw.cmp(&other.raw))
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Arithmetic shift right by `shift` with round-half-to-even.
#[inline]
pub(crate) fn round_shr(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let q = v >> shift;
    let rem = v - (q << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && (q & 1) == 1) {
        q + 1
    } else {
        q
    }
}

/// Rounded signed division (half to even).
pub(crate) fn round_div(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let rem = num.rem_euclid(den);
    let twice = 2 * rem;
    if twice > den || (twice == den && (q & 1) == 1) {
        q + 1
    } else {
        q
    }
}

/// Saturating fixed-point ALU with a sticky saturation flag and an op counter.
///
/// The op counter feeds the core-energy bucket of the run report.
#[derive(Clone, Debug)]
pub struct Alu {
    fmt: QFormat,
    ops: u64,
    saturated: bool,
    saturation_events: u64,
}

impl Alu {
    pub fn new(fmt: QFormat) -> Self {
        Alu {
            fmt,
            ops: 0,
            saturated: false,
            saturation_events: 0,
        }
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn saturation_events(&self) -> u64 {
        self.saturation_events
    }

    pub fn clear_saturation(&mut self) {
        self.saturated = false;
    }

    #[inline]
    fn finish(&mut self, raw: i128) -> Fixed {
        let (v, clipped) = Fixed::from_raw_saturating(raw, self.fmt);
        if clipped {
            self.saturated = true;
            self.saturation_events += 1;
        }
        v
    }

    /// Counts an operation executed outside the ALU's own methods.
    #[inline]
    pub fn count_op(&mut self) {
        self.ops += 1;
    }

    /// Feeds a clipping event from outside the ALU (e.g. a saturating shift).
    pub fn note_saturation(&mut self, clipped: bool) {
        if clipped {
            self.saturated = true;
            self.saturation_events += 1;
        }
    }

    #[inline]
    pub fn add(&mut self, a: Fixed, b: Fixed) -> Fixed {
        debug_assert_eq!(a.fmt, b.fmt);
        self.ops += 1;
        self.finish(a.raw as i128 + b.raw as i128)
    }

    #[inline]
    pub fn sub(&mut self, a: Fixed, b: Fixed) -> Fixed {
        debug_assert_eq!(a.fmt, b.fmt);
        self.ops += 1;
        self.finish(a.raw as i128 - b.raw as i128)
    }

    #[inline]
    pub fn mul(&mut self, a: Fixed, b: Fixed) -> Fixed {
        debug_assert_eq!(a.fmt, b.fmt);
        self.ops += 1;
        let p = a.raw as i128 * b.raw as i128;
        self.finish(round_shr(p, self.fmt.frac_bits as u32))
    }

    /// Clamp into `[lo, hi]`; returns whether clamping occurred.
    pub fn clamp(&mut self, x: Fixed, lo: Fixed, hi: Fixed) -> (Fixed, bool) {
        self.ops += 1;
        if x.raw < lo.raw {
            (lo, true)
        } else if x.raw > hi.raw {
            (hi, true)
        } else {
            (x, false)
        }
    }

    #[inline]
    pub fn ge(&mut self, a: Fixed, b: Fixed) -> bool {
        self.ops += 1;
        a.raw >= b.raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representable_range_of_default_format() {
        let q = QFormat::Q15_16;
        assert_eq!(q.min_value(), -32768.0);
        assert_eq!(q.max_value(), 32768.0 - q.lsb());
        assert!(Fixed::from_f64(-32768.0, q).is_ok());
        assert!(Fixed::from_f64(32768.0, q).is_err());
        assert!(Fixed::from_f64(-32768.0 - q.lsb(), q).is_err());
    }

    #[test]
    fn conversion_rounds_half_to_even() {
        let q = QFormat::new(3, 1).unwrap();
        // 0.25 is exactly half an LSB: ties go to the even raw value.
        assert_eq!(Fixed::from_f64(0.25, q).unwrap().raw(), 0);
        assert_eq!(Fixed::from_f64(0.75, q).unwrap().raw(), 2);
        assert_eq!(Fixed::from_f64(-0.25, q).unwrap().raw(), 0);
        assert_eq!(Fixed::from_f64(-0.75, q).unwrap().raw(), -2);
    }

    #[test]
    fn oversized_format_rejected() {
        assert!(QFormat::new(16, 16).is_err());
        assert!(QFormat::new(11, 20).is_ok());
    }

    #[test]
    fn word_round_trip_preserves_sign() {
        let q = QFormat::Q15_16;
        for x in [-32768.0, -1.5, 0.0, 1.0, 12345.678] {
            let f = Fixed::from_f64(x, q).unwrap();
            assert_eq!(Fixed::from_word(f.to_word(), q), f);
        }
    }

    #[test]
    fn alu_saturates_and_sets_sticky_flag() {
        let q = QFormat::Q15_16;
        let mut alu = Alu::new(q);
        let big = Fixed::from_f64(30000.0, q).unwrap();
        let s = alu.add(big, big);
        assert_eq!(s.raw(), q.max_raw());
        assert!(alu.saturated());
        let small = alu.add(Fixed::one(q), Fixed::one(q));
        assert_eq!(small.to_f64(), 2.0);
        assert!(alu.saturated(), "flag is sticky");
        assert_eq!(alu.ops(), 2);
        assert_eq!(alu.saturation_events(), 1);
    }

    #[test]
    fn mul_rounds_product() {
        let q = QFormat::Q15_16;
        let mut alu = Alu::new(q);
        let a = Fixed::from_f64(1.5, q).unwrap();
        let b = Fixed::from_f64(-2.25, q).unwrap();
        assert_eq!(alu.mul(a, b).to_f64(), -3.375);
    }

    #[test]
    fn rounding_helpers() {
        assert_eq!(round_shr(5, 1), 2); // 2.5 -> 2
        assert_eq!(round_shr(7, 1), 4); // 3.5 -> 4
        assert_eq!(round_shr(-5, 1), -2);
        assert_eq!(round_shr(-7, 1), -4);
        assert_eq!(round_div(7, 2), 4);
        assert_eq!(round_div(5, 2), 2);
        assert_eq!(round_div(-5, 2), -2);
        assert_eq!(round_div(-7, 3), -2);
    }
}
