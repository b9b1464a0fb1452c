//! Table-driven transcendental evaluation.
//!
//! Exponentials are evaluated by range reduction `t = N·ln2/2^K + r`,
//! a ROM fetch of `2^(d/2^K)` with `N = M·2^K + d`, and a second-order
//! polynomial for `e^r`. The `2^M` factor is a shift, which [`ExpValue`]
//! defers to the consumer so that small results keep their precision.
//!
//! Rate and polynomial functions of one variable (HH gating rates, ionic
//! current terms, Izhikevich right-hand sides) are sampled on a uniform grid
//! and read back with nearest-row indexing.
//!
//! All tables are laid out back to back in a ROM image; the [`LutDirectory`]
//! maps each [`LutKind`] to its start address and row count.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{round_div, round_shr, Alu, Fixed, QFormat};

/// ln 2 in Q0.62.
const LN2_Q62: i128 = 3_196_577_161_300_663_915;
/// Fractional bits of the internal exp datapath.
const WORK_FRAC: u32 = 48;

pub const MAX_EXP_K: u32 = 12;
pub const MIN_EXP_FRAC_BITS: u8 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LutKind {
    /// `2^(d/2^K)` reconstruction table.
    Exp,
    AlphaM,
    BetaM,
    AlphaN,
    BetaN,
    AlphaH,
    BetaH,
    /// `g_na·m³` over `m ∈ [0, 1]`.
    SodiumActivation,
    /// `g_k·n⁴` over `n ∈ [0, 1]`.
    PotassiumActivation,
    /// `g_l·(v − e_l)`.
    LeakCurrent,
    /// `0.04v² + 5v + 140`.
    IzhVoltage,
    /// `a·b·v`.
    IzhRecovery,
}

impl LutKind {
    pub fn name(self) -> &'static str {
        match self {
            LutKind::Exp => "exp",
            LutKind::AlphaM => "hh-alpha-m",
            LutKind::BetaM => "hh-beta-m",
            LutKind::AlphaN => "hh-alpha-n",
            LutKind::BetaN => "hh-beta-n",
            LutKind::AlphaH => "hh-alpha-h",
            LutKind::BetaH => "hh-beta-h",
            LutKind::SodiumActivation => "hh-m-cubed",
            LutKind::PotassiumActivation => "hh-n-fourth",
            LutKind::LeakCurrent => "hh-leak",
            LutKind::IzhVoltage => "izh-voltage",
            LutKind::IzhRecovery => "izh-recovery",
        }
    }
}

/// Uniform sampling grid of a function LUT, kept in both real and raw form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LutDomain {
    pub v_min: f64,
    pub v_max: f64,
    #[serde(skip)]
    min_raw: i64,
    #[serde(skip)]
    max_raw: i64,
}

#[derive(Clone, Debug)]
pub struct LutTable {
    kind: LutKind,
    rows: Vec<Fixed>,
    fmt: QFormat,
    k_param: u32,
    domain: Option<LutDomain>,
}

impl LutTable {
    pub fn kind(&self) -> LutKind {
        self.kind
    }

    pub fn rows(&self) -> &[Fixed] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    pub fn k_param(&self) -> u32 {
        self.k_param
    }

    pub fn domain(&self) -> Option<LutDomain> {
        self.domain
    }

    /// Nearest-row index for `x`, clamped to the table. The flag reports clamping.
    pub fn index_of(&self, x: Fixed) -> (usize, bool) {
        let dom = self
            .domain
            .expect("index_of called on a table without a sampling domain");
        let last = (self.rows.len() - 1) as i128;
        let span = (dom.max_raw - dom.min_raw) as i128;
        let idx = round_div((x.raw() - dom.min_raw) as i128 * last, span);
        if idx < 0 {
            (0, true)
        } else if idx > last {
            (last as usize, true)
        } else {
            (idx as usize, false)
        }
    }

    /// Nearest-row lookup through `port` (one ROM fetch).
    pub fn lookup(&self, x: Fixed, port: &mut impl LutPort) -> Result<(Fixed, bool)> {
        let (idx, clamped) = self.index_of(x);
        let word = port.fetch_lut(self.kind, idx)?;
        Ok((Fixed::from_word(word, self.fmt), clamped))
    }
}

/// Builds the `2^(d/2^K)` table for `d = 0..2^K`.
pub fn build_exp_lut(k_param: u32, fmt: QFormat) -> Result<LutTable> {
    if k_param > MAX_EXP_K {
        return Err(Error::Config(format!(
            "exp LUT K={k_param} outside [0, {MAX_EXP_K}]"
        )));
    }
    if fmt.frac_bits < MIN_EXP_FRAC_BITS {
        return Err(Error::Config(format!(
            "exp LUT needs at least {MIN_EXP_FRAC_BITS} fractional bits, got {}",
            fmt.frac_bits
        )));
    }
    let n = 1usize << k_param;
    let rows = (0..n)
        .map(|d| Fixed::from_f64((d as f64 / n as f64).exp2(), fmt))
        .collect::<Result<Vec<_>>>()?;
    Ok(LutTable {
        kind: LutKind::Exp,
        rows,
        fmt,
        k_param,
        domain: None,
    })
}

/// Samples `f` at `rows` evenly spaced points of `[v_min, v_max]`.
pub fn build_rate_lut(
    kind: LutKind,
    f: impl Fn(f64) -> f64,
    v_min: f64,
    v_max: f64,
    rows: usize,
    fmt: QFormat,
) -> Result<LutTable> {
    if rows < 2 {
        return Err(Error::Config(format!("{} LUT needs at least 2 rows", kind.name())));
    }
    if !(v_min < v_max) {
        return Err(Error::Config(format!(
            "{} LUT domain [{v_min}, {v_max}] is empty",
            kind.name()
        )));
    }
    let step = (v_max - v_min) / (rows - 1) as f64;
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let v = if i == rows - 1 { v_max } else { v_min + i as f64 * step };
        let y = f(v);
        if !y.is_finite() {
            return Err(Error::LutBuild(format!(
                "{} is not finite at v = {v} (row {i})",
                kind.name()
            )));
        }
        out.push(Fixed::from_f64(y, fmt)?);
    }
    let domain = LutDomain {
        v_min,
        v_max,
        min_raw: Fixed::from_f64(v_min, fmt)?.raw(),
        max_raw: Fixed::from_f64(v_max, fmt)?.raw(),
    };
    if domain.max_raw <= domain.min_raw {
        return Err(Error::Config(format!(
            "{} LUT domain collapses at {fmt}",
            kind.name()
        )));
    }
    Ok(LutTable {
        kind,
        rows: out,
        fmt,
        k_param: 0,
        domain: Some(domain),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LutEntry {
    pub kind: LutKind,
    /// Word address of row 0 inside the ROM plane.
    pub start_row: usize,
    pub row_count: usize,
    pub k_param: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LutDirectory {
    entries: Vec<LutEntry>,
}

impl LutDirectory {
    pub fn entries(&self) -> &[LutEntry] {
        &self.entries
    }

    pub fn get(&self, kind: LutKind) -> Option<&LutEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    /// Resolves `kind` + `offset` to a ROM word address.
    pub fn address(&self, kind: LutKind, offset: usize) -> Result<usize> {
        let e = self.get(kind).ok_or(Error::Directory(kind))?;
        if offset >= e.row_count {
            return Err(Error::Bounds {
                addr: offset,
                len: e.row_count,
            });
        }
        Ok(e.start_row + offset)
    }

    /// Total words occupied.
    pub fn used_words(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.start_row + e.row_count)
            .max()
            .unwrap_or(0)
    }

    /// Checks disjointness, containment in `capacity` words, and the exp row-count rule.
    pub fn validate(&self, capacity: usize) -> Result<()> {
        let mut sorted: Vec<&LutEntry> = self.entries.iter().collect();
        sorted.sort_by_key(|e| e.start_row);
        for w in sorted.windows(2) {
            if w[0].start_row + w[0].row_count > w[1].start_row {
                return Err(Error::Capacity(format!(
                    "LUTs {} and {} overlap",
                    w[0].kind.name(),
                    w[1].kind.name()
                )));
            }
        }
        for e in &self.entries {
            if e.row_count == 0 {
                return Err(Error::Capacity(format!("LUT {} is empty", e.kind.name())));
            }
            if e.start_row + e.row_count > capacity {
                return Err(Error::Capacity(format!(
                    "LUT {} ends at word {} beyond ROM capacity {capacity}",
                    e.kind.name(),
                    e.start_row + e.row_count
                )));
            }
            if e.kind == LutKind::Exp && e.row_count != 1usize << e.k_param {
                return Err(Error::Capacity(format!(
                    "exp LUT with K={} must have {} rows, has {}",
                    e.k_param,
                    1usize << e.k_param,
                    e.row_count
                )));
            }
        }
        Ok(())
    }
}

/// Immutable ROM contents plus the directory describing them.
#[derive(Clone, Debug)]
pub struct RomImage {
    words: Arc<[u32]>,
    directory: LutDirectory,
}

impl RomImage {
    /// Packs `tables` back to back starting at address 0.
    pub fn build<'a>(tables: impl IntoIterator<Item = &'a LutTable>) -> Result<Self> {
        let mut words = Vec::new();
        let mut entries: Vec<LutEntry> = Vec::new();
        for t in tables {
            if entries.iter().any(|e| e.kind == t.kind) {
                return Err(Error::Config(format!(
                    "LUT {} listed twice",
                    t.kind.name()
                )));
            }
            entries.push(LutEntry {
                kind: t.kind,
                start_row: words.len(),
                row_count: t.rows.len(),
                k_param: t.k_param,
            });
            words.extend(t.rows.iter().map(|r| r.to_word()));
        }
        let directory = LutDirectory { entries };
        directory.validate(words.len())?;
        Ok(RomImage {
            words: words.into(),
            directory,
        })
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub(crate) fn shared_words(&self) -> Arc<[u32]> {
        Arc::clone(&self.words)
    }

    pub fn directory(&self) -> &LutDirectory {
        &self.directory
    }

    pub fn len_words(&self) -> usize {
        self.words.len()
    }
}

/// Anything that can serve a LUT fetch.
///
/// [`crate::memory::MemArray`] serves fetches from its ROM plane and charges
/// them; [`RomImage`] serves them free of charge, which reference evaluators
/// use to reproduce the exact same numerics without accounting.
pub trait LutPort {
    fn fetch_lut(&mut self, kind: LutKind, offset: usize) -> Result<u32>;
}

impl LutPort for RomImage {
    fn fetch_lut(&mut self, kind: LutKind, offset: usize) -> Result<u32> {
        let addr = self.directory.address(kind, offset)?;
        Ok(self.words[addr])
    }
}

/// Reads the ROM word at `start_row(kind) + offset`.
pub fn fetch_lut(rom: &mut impl LutPort, kind: LutKind, offset: usize) -> Result<u32> {
    rom.fetch_lut(kind, offset)
}

/// `t = n_steps·ln2/2^K + remainder`, `n_steps = big_m·2^K + index_d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeReduction {
    pub big_m: i64,
    pub index_d: usize,
    pub remainder_r: Fixed,
    pub n_steps: i64,
    /// Remainder with 48 fractional bits, as carried on the exp datapath.
    remainder_fine: i128,
}

impl RangeReduction {
    pub fn remainder_f64(&self) -> f64 {
        self.remainder_fine as f64 * (-(WORK_FRAC as f64)).exp2()
    }
}

/// Decomposes `t`; `n_steps` is rounded to nearest so that
/// `|r| ≤ ln2/2^(K+1)` up to one LSB.
pub fn range_reduce(t: Fixed, k_param: u32) -> RangeReduction {
    let fmt = t.format();
    let f = fmt.frac_bits as u32;
    debug_assert!(k_param <= MAX_EXP_K && f <= WORK_FRAC);
    let num = (t.raw() as i128) << (k_param + 62);
    let den = LN2_Q62 << f;
    let n = round_div(num, den);
    let step_fine = round_shr(n * LN2_Q62, 62 + k_param - WORK_FRAC);
    let r_fine = ((t.raw() as i128) << (WORK_FRAC - f)) - step_fine;
    let r_raw = round_shr(r_fine, WORK_FRAC - f);
    let (remainder_r, _) = Fixed::from_raw_saturating(r_raw, fmt);
    let size = 1i128 << k_param;
    RangeReduction {
        big_m: n.div_euclid(size) as i64,
        index_d: n.rem_euclid(size) as usize,
        remainder_r,
        n_steps: n as i64,
        remainder_fine: r_fine,
    }
}

/// `mantissa · 2^shift`, the output of the exp unit before the final shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpValue {
    pub mantissa: Fixed,
    pub shift: i64,
    /// The shifted value does not fit the fixed-point format.
    pub saturated: bool,
}

impl ExpValue {
    /// Exact real value represented.
    pub fn to_f64(&self) -> f64 {
        self.mantissa.to_f64() * (self.shift as f64).exp2()
    }

    /// Applies the `2^M` shift, saturating on overflow.
    pub fn to_fixed(&self) -> Fixed {
        let fmt = self.mantissa.format();
        Fixed::from_raw_saturating(shift_raw(self.mantissa.raw() as i128, self.shift), fmt).0
    }

    /// `x · mantissa · 2^shift` with a single rounding step.
    pub fn scale(&self, x: Fixed, alu: &mut Alu) -> Fixed {
        let fmt = x.format();
        let prod = x.raw() as i128 * self.mantissa.raw() as i128;
        let raw = shift_raw(prod, self.shift - fmt.frac_bits as i64);
        alu.count_op();
        let (v, clipped) = Fixed::from_raw_saturating(raw, fmt);
        alu.note_saturation(clipped);
        v
    }
}

/// `v · 2^shift` with rounding for negative shifts and saturation-friendly
/// clamping for large positive ones.
fn shift_raw(v: i128, shift: i64) -> i128 {
    if v == 0 {
        return 0;
    }
    if shift >= 0 {
        if shift > 60 {
            return if v > 0 { i128::MAX } else { i128::MIN };
        }
        v.saturating_mul(1i128 << shift)
    } else {
        let s = -shift;
        if s > 120 {
            return 0;
        }
        round_shr(v, s as u32)
    }
}

/// `e^t` via range reduction, one ROM fetch of `LUT(d)`, and `P(r) = 1 + r + r²/2`.
pub fn eval_exp(t: Fixed, lut: &LutTable, rom: &mut impl LutPort) -> Result<ExpValue> {
    if lut.kind != LutKind::Exp {
        return Err(Error::Directory(LutKind::Exp));
    }
    let fmt = t.format();
    if fmt != lut.fmt {
        return Err(Error::Config(format!(
            "exp LUT format {} does not match operand format {fmt}",
            lut.fmt
        )));
    }
    let f = fmt.frac_bits as u32;
    let rr = range_reduce(t, lut.k_param);
    let word = rom.fetch_lut(LutKind::Exp, rr.index_d)?;
    let lut_fine = (Fixed::from_word(word, fmt).raw() as i128) << (WORK_FRAC - f);
    let r = rr.remainder_fine;
    let poly = (1i128 << WORK_FRAC) + r + round_shr(r * r, WORK_FRAC + 1);
    let prod = round_shr(lut_fine * poly, WORK_FRAC);
    let mant_raw = round_shr(prod, WORK_FRAC - f);
    let (mantissa, _) = Fixed::from_raw_saturating(mant_raw, fmt);
    let shifted = shift_raw(mant_raw, rr.big_m);
    let saturated = shifted > fmt.max_raw() as i128;
    Ok(ExpValue {
        mantissa,
        shift: rr.big_m,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q16() -> QFormat {
        QFormat::Q15_16
    }

    fn fx(x: f64) -> Fixed {
        Fixed::from_f64(x, q16()).unwrap()
    }

    #[test]
    fn exp_lut_k0_is_single_one() {
        let t = build_exp_lut(0, q16()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.rows()[0].to_f64(), 1.0);
    }

    #[test]
    fn exp_lut_k2_matches_high_precision_values() {
        // round(2^(d/4) · 2^16), computed with 60-digit arithmetic
        let expected = [65536, 77936, 92682, 110218];
        let t = build_exp_lut(2, q16()).unwrap();
        let got: Vec<i64> = t.rows().iter().map(|r| r.raw()).collect();
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() <= 1, "{got:?}");
        }
    }

    #[test]
    fn exp_lut_k6_monotone_below_two() {
        let t = build_exp_lut(6, q16()).unwrap();
        assert_eq!(t.len(), 64);
        assert_eq!(t.rows()[0].to_f64(), 1.0);
        for w in t.rows().windows(2) {
            assert!(w[0].raw() < w[1].raw());
        }
        assert!(t.rows()[63].to_f64() < 2.0);
        // spot checks against 60-digit values
        assert_eq!(t.rows()[1].raw(), 66250);
        assert_eq!(t.rows()[32].raw(), 92682);
        assert_eq!(t.rows()[63].raw(), 129660);
    }

    #[test]
    fn exp_lut_rejects_bad_parameters() {
        assert!(matches!(build_exp_lut(13, q16()), Err(Error::Config(_))));
        let narrow = QFormat::new(20, 7).unwrap();
        assert!(matches!(build_exp_lut(4, narrow), Err(Error::Config(_))));
    }

    #[test]
    fn range_reduce_zero() {
        for k in [0, 2, 6, 12] {
            let rr = range_reduce(fx(0.0), k);
            assert_eq!((rr.big_m, rr.index_d, rr.remainder_r.raw()), (0, 0, 0));
        }
    }

    #[test]
    fn range_reduce_ln2_and_negative_ln2() {
        let lsb = q16().lsb();
        let rr = range_reduce(fx(std::f64::consts::LN_2), 2);
        assert_eq!((rr.n_steps, rr.big_m, rr.index_d), (4, 1, 0));
        assert!(rr.remainder_r.to_f64().abs() <= lsb);
        let rr = range_reduce(fx(-std::f64::consts::LN_2), 2);
        assert_eq!((rr.n_steps, rr.big_m, rr.index_d), (-4, -1, 0));
        assert!(rr.remainder_r.to_f64().abs() <= lsb);
    }

    #[test]
    fn remainder_bound_holds_on_negative_branch() {
        let lsb = q16().lsb();
        let bound = std::f64::consts::LN_2 / 2f64.powi(7) + lsb;
        for raw in (-8 * 65536..=0).step_by(977) {
            let rr = range_reduce(Fixed::from_raw(raw, q16()).unwrap(), 6);
            assert!(rr.remainder_r.to_f64().abs() <= bound);
            assert!(rr.index_d < 64);
            assert_eq!(rr.n_steps, rr.big_m * 64 + rr.index_d as i64);
        }
    }

    #[test]
    fn eval_exp_zero_is_exactly_one() {
        let lut = build_exp_lut(6, q16()).unwrap();
        let mut rom = RomImage::build([&lut]).unwrap();
        let e = eval_exp(fx(0.0), &lut, &mut rom).unwrap();
        assert_eq!(e.to_fixed().to_f64(), 1.0);
        assert!(!e.saturated);
    }

    #[test]
    fn eval_exp_ln2_is_two() {
        let lut = build_exp_lut(6, q16()).unwrap();
        let mut rom = RomImage::build([&lut]).unwrap();
        let e = eval_exp(fx(std::f64::consts::LN_2), &lut, &mut rom).unwrap();
        assert!((e.to_fixed().to_f64() - 2.0).abs() <= 2.0 * q16().lsb());
    }

    #[test]
    fn eval_exp_minus_one() {
        let lut = build_exp_lut(6, q16()).unwrap();
        let mut rom = RomImage::build([&lut]).unwrap();
        let e = eval_exp(fx(-1.0), &lut, &mut rom).unwrap();
        let truth = 0.367_879_441_171_442_3;
        assert!(((e.to_f64() - truth) / truth).abs() <= 1e-4);
        assert!(((e.to_fixed().to_f64() - truth) / truth).abs() <= 1e-4);
    }

    #[test]
    fn eval_exp_flags_overflow() {
        let lut = build_exp_lut(6, q16()).unwrap();
        let mut rom = RomImage::build([&lut]).unwrap();
        let e = eval_exp(fx(12.0), &lut, &mut rom).unwrap();
        assert!(e.saturated);
        assert_eq!(e.to_fixed().raw(), q16().max_raw());
        let e = eval_exp(fx(10.0), &lut, &mut rom).unwrap();
        assert!(!e.saturated);
    }

    #[test]
    fn scale_uses_single_rounding() {
        let lut = build_exp_lut(6, q16()).unwrap();
        let mut rom = RomImage::build([&lut]).unwrap();
        let mut alu = Alu::new(q16());
        let e = eval_exp(fx(-8.0), &lut, &mut rom).unwrap();
        let scaled = e.scale(fx(1000.0), &mut alu);
        let truth = 1000.0 * (-8.0f64).exp();
        assert!((scaled.to_f64() - truth).abs() / truth < 1e-4);
        assert_eq!(alu.ops(), 1);
    }

    #[test]
    fn fetch_lut_addresses_and_errors() {
        let exp = build_exp_lut(2, q16()).unwrap();
        let am = build_rate_lut(LutKind::AlphaM, |v| v, 0.0, 1.0, 8, q16()).unwrap();
        let mut rom = RomImage::build([&exp, &am]).unwrap();
        let w0 = fetch_lut(&mut rom, LutKind::Exp, 0).unwrap();
        assert_eq!(Fixed::from_word(w0, q16()).to_f64(), 1.0);
        let w2 = fetch_lut(&mut rom, LutKind::Exp, 2).unwrap();
        assert_eq!(Fixed::from_word(w2, q16()).raw(), 92682);
        assert!(matches!(
            fetch_lut(&mut rom, LutKind::AlphaM, 8),
            Err(Error::Bounds { .. })
        ));
        assert!(matches!(
            fetch_lut(&mut rom, LutKind::BetaH, 0),
            Err(Error::Directory(LutKind::BetaH))
        ));
        assert_eq!(rom.directory().get(LutKind::AlphaM).unwrap().start_row, 4);
    }

    #[test]
    fn rate_lut_constant_and_linear() {
        let t = build_rate_lut(LutKind::BetaN, |_| 1.0, -100.0, 50.0, 17, q16()).unwrap();
        assert!(t.rows().iter().all(|r| r.to_f64() == 1.0));
        let t = build_rate_lut(LutKind::LeakCurrent, |v| 3.0 * v - 2.0, -4.0, 6.0, 2, q16()).unwrap();
        assert_eq!(t.rows()[0].to_f64(), -14.0);
        assert_eq!(t.rows()[1].to_f64(), 16.0);
    }

    #[test]
    fn rate_lut_reports_non_finite_point() {
        let err = build_rate_lut(LutKind::AlphaN, |v| 1.0 / v, -1.0, 1.0, 3, q16()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("v = 0"), "{msg}");
    }

    #[test]
    fn nearest_row_index_rounds_and_clamps() {
        let t = build_rate_lut(LutKind::AlphaH, |v| v, 0.0, 10.0, 11, q16()).unwrap();
        assert_eq!(t.index_of(fx(4.4)), (4, false));
        assert_eq!(t.index_of(fx(4.6)), (5, false));
        assert_eq!(t.index_of(fx(-3.0)), (0, true));
        assert_eq!(t.index_of(fx(99.0)), (10, true));
    }

    #[test]
    fn directory_validation() {
        let dir = LutDirectory {
            entries: vec![
                LutEntry { kind: LutKind::Exp, start_row: 0, row_count: 4, k_param: 2 },
                LutEntry { kind: LutKind::AlphaM, start_row: 3, row_count: 4, k_param: 0 },
            ],
        };
        assert!(dir.validate(100).is_err());
        let dir = LutDirectory {
            entries: vec![LutEntry { kind: LutKind::Exp, start_row: 0, row_count: 5, k_param: 2 }],
        };
        assert!(dir.validate(100).is_err());
        let dir = LutDirectory {
            entries: vec![LutEntry { kind: LutKind::Exp, start_row: 0, row_count: 4, k_param: 2 }],
        };
        assert!(dir.validate(3).is_err());
        assert!(dir.validate(4).is_ok());
    }
}
