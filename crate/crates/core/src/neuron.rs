//! Fixed-point neuron dynamics, synaptic accumulation, and exponential STDP.
//!
//! Each model update touches memory according to a fixed contract
//! ([`ModelKind::contract`]):
//!
//! | model | ROM fetches | RAM reads | RAM writes |
//! |---|---|---|---|
//! | LIF | 1 (decay factor `e^(−dt/τ)`) | 1 (`v`) | 1 |
//! | Izhikevich | 2 (`0.04v²+5v+140`, `a·b·v`) | 2 (`v`, `u`) | 2 |
//! | Hodgkin-Huxley | 9 (six rates, `g_na·m³`, `g_k·n⁴`, leak) | 4 | 4 |
//!
//! Units: time in ms, membrane potential in mV (LIF uses a dimensionless
//! potential with threshold 1 by default), HH currents in µA/cm² and
//! conductances in mS/cm².
//!
//! Per-neuron refractory counters and the HH re-arm flag live in PE
//! registers, not in RAM, and are passed in as `reg`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Alu, Fixed, QFormat};
use crate::lut::{build_exp_lut, build_rate_lut, eval_exp, LutKind, LutPort, LutTable, RomImage};
use crate::memory::MemArray;

pub const W_MIN: f64 = -1.0;
pub const W_MAX: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lif")]
    Lif,
    #[serde(rename = "izhikevich", alias = "izh")]
    Izhikevich,
    #[serde(rename = "hh", alias = "hodgkin_huxley")]
    HodgkinHuxley,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lif, ModelKind::Izhikevich, ModelKind::HodgkinHuxley];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lif => "lif",
            ModelKind::Izhikevich => "izhikevich",
            ModelKind::HodgkinHuxley => "hh",
        }
    }

    /// RAM words of state per neuron.
    pub fn state_words(self) -> usize {
        match self {
            ModelKind::Lif => 1,
            ModelKind::Izhikevich => 2,
            ModelKind::HodgkinHuxley => 4,
        }
    }

    /// Memory operations of one neuron update.
    pub fn contract(self) -> AccessContract {
        match self {
            ModelKind::Lif => AccessContract::new(1, 1, 1),
            ModelKind::Izhikevich => AccessContract::new(2, 2, 2),
            ModelKind::HodgkinHuxley => AccessContract::new(9, 4, 4),
        }
    }

    /// LUTs the model reads besides the exp table.
    pub fn luts(self) -> &'static [LutKind] {
        match self {
            ModelKind::Lif => &[],
            ModelKind::Izhikevich => &[LutKind::IzhVoltage, LutKind::IzhRecovery],
            ModelKind::HodgkinHuxley => &[
                LutKind::AlphaM,
                LutKind::BetaM,
                LutKind::AlphaN,
                LutKind::BetaN,
                LutKind::AlphaH,
                LutKind::BetaH,
                LutKind::SodiumActivation,
                LutKind::PotassiumActivation,
                LutKind::LeakCurrent,
            ],
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lif" => Ok(ModelKind::Lif),
            "izhikevich" | "izh" => Ok(ModelKind::Izhikevich),
            "hh" | "hodgkin_huxley" => Ok(ModelKind::HodgkinHuxley),
            other => Err(Error::Config(format!("unknown neuron model `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct AccessContract {
    pub rom_reads: u64,
    pub ram_reads: u64,
    pub ram_writes: u64,
}

impl AccessContract {
    pub const fn new(rom_reads: u64, ram_reads: u64, ram_writes: u64) -> Self {
        AccessContract {
            rom_reads,
            ram_reads,
            ram_writes,
        }
    }

    pub fn times(self, n: u64) -> AccessContract {
        AccessContract::new(self.rom_reads * n, self.ram_reads * n, self.ram_writes * n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifParams {
    pub tau_m_ms: f64,
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_th: f64,
    pub r_m: f64,
    pub dt_ms: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            tau_m_ms: 20.0,
            v_rest: 0.0,
            v_reset: 0.0,
            v_th: 1.0,
            r_m: 20.0,
            dt_ms: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IzhParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub v_th: f64,
    pub v_init: f64,
    pub input_gain: f64,
    pub dt_ms: f64,
    pub lut_v_min: f64,
    pub lut_v_max: f64,
    pub lut_rows: usize,
}

impl Default for IzhParams {
    fn default() -> Self {
        IzhParams {
            a: 0.02,
            b: 0.2,
            c: -65.0,
            d: 8.0,
            v_th: 30.0,
            v_init: -65.0,
            input_gain: 10.0,
            dt_ms: 1.0,
            lut_v_min: -100.0,
            lut_v_max: 35.0,
            lut_rows: 2161,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HhParams {
    pub c_m: f64,
    pub g_na: f64,
    pub g_k: f64,
    pub g_l: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub v_th: f64,
    pub hysteresis_mv: f64,
    pub v_init: f64,
    pub input_gain: f64,
    pub dt_ms: f64,
    pub lut_v_min: f64,
    pub lut_v_max: f64,
    pub lut_rows: usize,
    pub gate_lut_rows: usize,
}

impl Default for HhParams {
    fn default() -> Self {
        HhParams {
            c_m: 1.0,
            g_na: 120.0,
            g_k: 36.0,
            g_l: 0.3,
            e_na: 50.0,
            e_k: -77.0,
            e_l: -54.387,
            v_th: 0.0,
            hysteresis_mv: 10.0,
            v_init: -65.0,
            input_gain: 10.0,
            dt_ms: 0.01,
            lut_v_min: -100.0,
            lut_v_max: 60.0,
            lut_rows: 1025,
            gate_lut_rows: 1025,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StdpParams {
    pub eta: f64,
    pub tau_ms: f64,
    /// Pre-spike timestamps older than `window_taus·tau` are forgotten.
    pub window_taus: f64,
    /// Duration of one network time-step.
    pub step_ms: f64,
}

impl Default for StdpParams {
    fn default() -> Self {
        StdpParams {
            eta: 0.01,
            tau_ms: 20.0,
            window_taus: 8.0,
            step_ms: 1.0,
        }
    }
}

impl StdpParams {
    /// Retention window in network time-steps.
    pub fn window_steps(&self) -> u32 {
        (self.window_taus * self.tau_ms / self.step_ms).ceil() as u32
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronParams {
    pub lif: LifParams,
    pub izhikevich: IzhParams,
    pub hh: HhParams,
    pub stdp: StdpParams,
    /// Steps during which LIF and Izhikevich neurons ignore input after a spike.
    pub refractory_steps: u16,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams {
            lif: LifParams::default(),
            izhikevich: IzhParams::default(),
            hh: HhParams::default(),
            stdp: StdpParams::default(),
            refractory_steps: 2,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be > 0, got {v}")))
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        let l = &self.lif;
        positive("lif.dt_ms", l.dt_ms)?;
        positive("lif.tau_m_ms", l.tau_m_ms)?;
        if !(l.v_th > l.v_reset) {
            return Err(Error::Config(format!(
                "lif.v_th ({}) must exceed lif.v_reset ({})",
                l.v_th, l.v_reset
            )));
        }
        if l.v_reset > l.v_rest {
            return Err(Error::Config(format!(
                "lif.v_reset ({}) must not exceed lif.v_rest ({})",
                l.v_reset, l.v_rest
            )));
        }
        let z = &self.izhikevich;
        positive("izhikevich.dt_ms", z.dt_ms)?;
        if z.lut_rows < 2 || !(z.lut_v_min < z.lut_v_max) {
            return Err(Error::Config("izhikevich LUT grid is empty".into()));
        }
        let h = &self.hh;
        positive("hh.dt_ms", h.dt_ms)?;
        positive("hh.c_m", h.c_m)?;
        if h.lut_rows < 2 || h.gate_lut_rows < 2 || !(h.lut_v_min < h.lut_v_max) {
            return Err(Error::Config("hh LUT grid is empty".into()));
        }
        if !(h.hysteresis_mv >= 0.0) {
            return Err(Error::Config("hh.hysteresis_mv must be >= 0".into()));
        }
        let s = &self.stdp;
        positive("stdp.tau_ms", s.tau_ms)?;
        positive("stdp.step_ms", s.step_ms)?;
        positive("stdp.window_taus", s.window_taus)?;
        if !(s.eta >= 0.0 && s.eta <= 1.0) {
            return Err(Error::Config(format!("stdp.eta must lie in [0, 1], got {}", s.eta)));
        }
        Ok(())
    }
}

/// Standard squid-axon rate functions (ms⁻¹) shifted to a −65 mV rest.
pub mod hh_rates {
    fn vtrap(x: f64, y: f64) -> f64 {
        // x / (1 − e^(−x/y)) with its limit y at x = 0
        if (x / y).abs() < 1e-7 {
            y * (1.0 + x / (2.0 * y))
        } else {
            x / (1.0 - (-x / y).exp())
        }
    }

    pub fn alpha_m(v: f64) -> f64 {
        0.1 * vtrap(v + 40.0, 10.0)
    }

    pub fn beta_m(v: f64) -> f64 {
        4.0 * (-(v + 65.0) / 18.0).exp()
    }

    pub fn alpha_h(v: f64) -> f64 {
        0.07 * (-(v + 65.0) / 20.0).exp()
    }

    pub fn beta_h(v: f64) -> f64 {
        1.0 / (1.0 + (-(v + 35.0) / 10.0).exp())
    }

    pub fn alpha_n(v: f64) -> f64 {
        0.01 * vtrap(v + 55.0, 10.0)
    }

    pub fn beta_n(v: f64) -> f64 {
        0.125 * (-(v + 65.0) / 80.0).exp()
    }

    /// Steady-state gate values `(m, n, h)` at `v`.
    pub fn steady_state(v: f64) -> (f64, f64, f64) {
        let m = alpha_m(v) / (alpha_m(v) + beta_m(v));
        let n = alpha_n(v) / (alpha_n(v) + beta_n(v));
        let h = alpha_h(v) / (alpha_h(v) + beta_h(v));
        (m, n, h)
    }
}

/// All LUTs a network needs, plus the packed ROM image.
#[derive(Clone, Debug)]
pub struct LutSet {
    tables: BTreeMap<LutKind, LutTable>,
    image: RomImage,
}

impl LutSet {
    /// Builds the exp table and the tables of every model in `models`.
    pub fn build(params: &NeuronParams, models: &[ModelKind], fmt: QFormat, exp_k: u32) -> Result<Self> {
        let mut tables = vec![build_exp_lut(exp_k, fmt)?];
        let mut kinds: Vec<ModelKind> = models.to_vec();
        kinds.sort();
        kinds.dedup();
        for m in kinds {
            match m {
                ModelKind::Lif => {}
                ModelKind::Izhikevich => {
                    let z = &params.izhikevich;
                    let ab = z.a * z.b;
                    tables.push(build_rate_lut(
                        LutKind::IzhVoltage,
                        |v| 0.04 * v * v + 5.0 * v + 140.0,
                        z.lut_v_min,
                        z.lut_v_max,
                        z.lut_rows,
                        fmt,
                    )?);
                    tables.push(build_rate_lut(
                        LutKind::IzhRecovery,
                        move |v| ab * v,
                        z.lut_v_min,
                        z.lut_v_max,
                        z.lut_rows,
                        fmt,
                    )?);
                }
                ModelKind::HodgkinHuxley => {
                    let h = &params.hh;
                    let rates: [(LutKind, fn(f64) -> f64); 6] = [
                        (LutKind::AlphaM, hh_rates::alpha_m),
                        (LutKind::BetaM, hh_rates::beta_m),
                        (LutKind::AlphaN, hh_rates::alpha_n),
                        (LutKind::BetaN, hh_rates::beta_n),
                        (LutKind::AlphaH, hh_rates::alpha_h),
                        (LutKind::BetaH, hh_rates::beta_h),
                    ];
                    for (kind, f) in rates {
                        tables.push(build_rate_lut(kind, f, h.lut_v_min, h.lut_v_max, h.lut_rows, fmt)?);
                    }
                    let (g_na, g_k, g_l, e_l) = (h.g_na, h.g_k, h.g_l, h.e_l);
                    tables.push(build_rate_lut(
                        LutKind::SodiumActivation,
                        move |m| g_na * m * m * m,
                        0.0,
                        1.0,
                        h.gate_lut_rows,
                        fmt,
                    )?);
                    tables.push(build_rate_lut(
                        LutKind::PotassiumActivation,
                        move |n| g_k * n * n * n * n,
                        0.0,
                        1.0,
                        h.gate_lut_rows,
                        fmt,
                    )?);
                    tables.push(build_rate_lut(
                        LutKind::LeakCurrent,
                        move |v| g_l * (v - e_l),
                        h.lut_v_min,
                        h.lut_v_max,
                        h.lut_rows,
                        fmt,
                    )?);
                }
            }
        }
        let image = RomImage::build(tables.iter())?;
        let tables = tables.into_iter().map(|t| (t.kind(), t)).collect();
        Ok(LutSet { tables, image })
    }

    pub fn table(&self, kind: LutKind) -> Result<&LutTable> {
        self.tables.get(&kind).ok_or(Error::Directory(kind))
    }

    pub fn image(&self) -> &RomImage {
        &self.image
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LifState {
    pub v: Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IzhState {
    pub v: Fixed,
    pub u: Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HhState {
    pub v: Fixed,
    pub m: Fixed,
    pub n: Fixed,
    pub h: Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NeuronState {
    Lif(LifState),
    Izh(IzhState),
    Hh(HhState),
}

impl NeuronState {
    pub fn model(&self) -> ModelKind {
        match self {
            NeuronState::Lif(_) => ModelKind::Lif,
            NeuronState::Izh(_) => ModelKind::Izhikevich,
            NeuronState::Hh(_) => ModelKind::HodgkinHuxley,
        }
    }

    /// Membrane potential.
    pub fn v(&self) -> Fixed {
        match self {
            NeuronState::Lif(s) => s.v,
            NeuronState::Izh(s) => s.v,
            NeuronState::Hh(s) => s.v,
        }
    }

    /// Memory words in storage order; only the first `state_words()` are meaningful.
    pub fn to_words(&self) -> [u32; 4] {
        match self {
            NeuronState::Lif(s) => [s.v.to_word(), 0, 0, 0],
            NeuronState::Izh(s) => [s.v.to_word(), s.u.to_word(), 0, 0],
            NeuronState::Hh(s) => [s.v.to_word(), s.m.to_word(), s.n.to_word(), s.h.to_word()],
        }
    }

    pub fn from_words(model: ModelKind, w: &[u32], fmt: QFormat) -> Self {
        let f = |i: usize| Fixed::from_word(w[i], fmt);
        match model {
            ModelKind::Lif => NeuronState::Lif(LifState { v: f(0) }),
            ModelKind::Izhikevich => NeuronState::Izh(IzhState { v: f(0), u: f(1) }),
            ModelKind::HodgkinHuxley => NeuronState::Hh(HhState {
                v: f(0),
                m: f(1),
                n: f(2),
                h: f(3),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub spiked: bool,
    /// Gating variables clamped into `[0, 1]` during this step.
    pub clamp_events: u32,
}

#[derive(Clone, Debug)]
struct LifConsts {
    v_rest: Fixed,
    v_reset: Fixed,
    v_th: Fixed,
    r_m: Fixed,
    decay_arg: Fixed,
}

#[derive(Clone, Debug)]
struct IzhConsts {
    dt: Fixed,
    a: Fixed,
    c: Fixed,
    d: Fixed,
    v_th: Fixed,
    gain: Fixed,
    v_init: Fixed,
    u_init: Fixed,
}

#[derive(Clone, Debug)]
struct HhConsts {
    dt: Fixed,
    dt_over_c: Fixed,
    e_na: Fixed,
    e_k: Fixed,
    v_th: Fixed,
    v_rearm: Fixed,
    gain: Fixed,
    init: HhState,
}

#[derive(Clone, Debug)]
struct StdpConsts {
    eta: Fixed,
    inv_tau: Fixed,
    step_ms: Fixed,
}

/// Compiled fixed-point constants and LUTs for every model of a network.
#[derive(Clone, Debug)]
pub struct Dynamics {
    fmt: QFormat,
    params: NeuronParams,
    luts: LutSet,
    lif: LifConsts,
    izh: IzhConsts,
    hh: HhConsts,
    stdp: StdpConsts,
    w_min: Fixed,
    w_max: Fixed,
}

impl Dynamics {
    pub fn new(params: NeuronParams, models: &[ModelKind], fmt: QFormat, exp_k: u32) -> Result<Self> {
        params.validate()?;
        let luts = LutSet::build(&params, models, fmt, exp_k)?;
        let fx = |x: f64| Fixed::from_f64(x, fmt);
        let l = &params.lif;
        let lif = LifConsts {
            v_rest: fx(l.v_rest)?,
            v_reset: fx(l.v_reset)?,
            v_th: fx(l.v_th)?,
            r_m: fx(l.r_m)?,
            decay_arg: fx(-l.dt_ms / l.tau_m_ms)?,
        };
        let z = &params.izhikevich;
        let izh = IzhConsts {
            dt: fx(z.dt_ms)?,
            a: fx(z.a)?,
            c: fx(z.c)?,
            d: fx(z.d)?,
            v_th: fx(z.v_th)?,
            gain: fx(z.input_gain)?,
            v_init: fx(z.v_init)?,
            u_init: fx(z.b * z.v_init)?,
        };
        let h = &params.hh;
        let (m0, n0, h0) = hh_rates::steady_state(h.v_init);
        let hh = HhConsts {
            dt: fx(h.dt_ms)?,
            dt_over_c: fx(h.dt_ms / h.c_m)?,
            e_na: fx(h.e_na)?,
            e_k: fx(h.e_k)?,
            v_th: fx(h.v_th)?,
            v_rearm: fx(h.v_th - h.hysteresis_mv)?,
            gain: fx(h.input_gain)?,
            init: HhState {
                v: fx(h.v_init)?,
                m: fx(m0)?,
                n: fx(n0)?,
                h: fx(h0)?,
            },
        };
        let s = &params.stdp;
        let stdp = StdpConsts {
            eta: fx(s.eta)?,
            inv_tau: fx(1.0 / s.tau_ms)?,
            step_ms: fx(s.step_ms)?,
        };
        Ok(Dynamics {
            fmt,
            luts,
            lif,
            izh,
            hh,
            stdp,
            w_min: fx(W_MIN)?,
            w_max: fx(W_MAX)?,
            params,
        })
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    pub fn params(&self) -> &NeuronParams {
        &self.params
    }

    pub fn luts(&self) -> &LutSet {
        &self.luts
    }

    pub fn initial_state(&self, model: ModelKind) -> NeuronState {
        match model {
            ModelKind::Lif => NeuronState::Lif(LifState { v: self.lif.v_rest }),
            ModelKind::Izhikevich => NeuronState::Izh(IzhState {
                v: self.izh.v_init,
                u: self.izh.u_init,
            }),
            ModelKind::HodgkinHuxley => NeuronState::Hh(self.hh.init),
        }
    }

    /// One integration step of any model.
    pub fn step(
        &self,
        state: NeuronState,
        i_syn: Fixed,
        reg: &mut u16,
        port: &mut impl LutPort,
        alu: &mut Alu,
    ) -> Result<(NeuronState, StepOutcome)> {
        match state {
            NeuronState::Lif(s) => {
                let (s, spiked) = self.lif_step(s, i_syn, reg, port, alu)?;
                Ok((NeuronState::Lif(s), StepOutcome { spiked, clamp_events: 0 }))
            }
            NeuronState::Izh(s) => {
                let (s, spiked) = self.izh_step(s, i_syn, reg, port, alu)?;
                Ok((NeuronState::Izh(s), StepOutcome { spiked, clamp_events: 0 }))
            }
            NeuronState::Hh(s) => {
                let (s, out) = self.hh_step(s, i_syn, reg, port, alu)?;
                Ok((NeuronState::Hh(s), out))
            }
        }
    }

    fn take_input(&self, i_syn: Fixed, reg: &mut u16) -> Fixed {
        if *reg > 0 {
            *reg -= 1;
            Fixed::zero(self.fmt)
        } else {
            i_syn
        }
    }

    /// Exponential-Euler leaky integrator:
    /// `v' = v_rest + κ(v − v_rest) + (1 − κ)·r_m·i` with `κ = e^(−dt/τ)`.
    pub fn lif_step(
        &self,
        s: LifState,
        i_syn: Fixed,
        reg: &mut u16,
        port: &mut impl LutPort,
        alu: &mut Alu,
    ) -> Result<(LifState, bool)> {
        let c = &self.lif;
        let i = self.take_input(i_syn, reg);
        let kappa = eval_exp(c.decay_arg, self.luts.table(LutKind::Exp)?, port)?;
        let dv = alu.sub(s.v, c.v_rest);
        let decayed = kappa.scale(dv, alu);
        let drive = alu.mul(c.r_m, i);
        let retained = kappa.scale(drive, alu);
        let injected = alu.sub(drive, retained);
        let base = alu.add(c.v_rest, decayed);
        let v = alu.add(base, injected);
        if alu.ge(v, c.v_th) {
            *reg = self.params.refractory_steps;
            return Ok((LifState { v: c.v_reset }, true));
        }
        let (v, _) = alu.clamp(v, c.v_reset, c.v_th);
        Ok((LifState { v }, false))
    }

    /// Forward-Euler quadratic integrate-and-fire with recovery:
    /// `v' = v + dt(0.04v² + 5v + 140 − u + g·i)`, `u' = u + dt(a·b·v − a·u)`.
    pub fn izh_step(
        &self,
        s: IzhState,
        i_syn: Fixed,
        reg: &mut u16,
        port: &mut impl LutPort,
        alu: &mut Alu,
    ) -> Result<(IzhState, bool)> {
        let c = &self.izh;
        let i = self.take_input(i_syn, reg);
        let f = self.lookup(LutKind::IzhVoltage, s.v, port)?;
        let g = self.lookup(LutKind::IzhRecovery, s.v, port)?;
        let gi = alu.mul(c.gain, i);
        let f_minus_u = alu.sub(f, s.u);
        let dv = alu.add(f_minus_u, gi);
        let step_v = alu.mul(c.dt, dv);
        let mut v = alu.add(s.v, step_v);
        let au = alu.mul(c.a, s.u);
        let du = alu.sub(g, au);
        let step_u = alu.mul(c.dt, du);
        let mut u = alu.add(s.u, step_u);
        let spiked = alu.ge(v, c.v_th);
        if spiked {
            v = c.c;
            u = alu.add(u, c.d);
            *reg = self.params.refractory_steps;
        }
        Ok((IzhState { v, u }, spiked))
    }

    fn lookup(&self, kind: LutKind, x: Fixed, port: &mut impl LutPort) -> Result<Fixed> {
        Ok(self.luts.table(kind)?.lookup(x, port)?.0)
    }

    fn gate(&self, x: Fixed, alpha: Fixed, beta: Fixed, alu: &mut Alu, clamps: &mut u32) -> Fixed {
        let one = Fixed::one(self.fmt);
        let zero = Fixed::zero(self.fmt);
        let open = alu.sub(one, x);
        let rise = alu.mul(alpha, open);
        let fall = alu.mul(beta, x);
        let dx = alu.sub(rise, fall);
        let step = alu.mul(self.hh.dt, dx);
        let y = alu.add(x, step);
        let (y, clamped) = alu.clamp(y, zero, one);
        *clamps += clamped as u32;
        y
    }

    /// Forward-Euler Hodgkin-Huxley step. A spike is an upward crossing of
    /// `v_th` while armed; the neuron re-arms once `v` falls below
    /// `v_th − hysteresis_mv`.
    pub fn hh_step(
        &self,
        s: HhState,
        i_syn: Fixed,
        reg: &mut u16,
        port: &mut impl LutPort,
        alu: &mut Alu,
    ) -> Result<(HhState, StepOutcome)> {
        let c = &self.hh;
        let am = self.lookup(LutKind::AlphaM, s.v, port)?;
        let bm = self.lookup(LutKind::BetaM, s.v, port)?;
        let an = self.lookup(LutKind::AlphaN, s.v, port)?;
        let bn = self.lookup(LutKind::BetaN, s.v, port)?;
        let ah = self.lookup(LutKind::AlphaH, s.v, port)?;
        let bh = self.lookup(LutKind::BetaH, s.v, port)?;
        let g_na_m3 = self.lookup(LutKind::SodiumActivation, s.m, port)?;
        let g_k_n4 = self.lookup(LutKind::PotassiumActivation, s.n, port)?;
        let i_l = self.lookup(LutKind::LeakCurrent, s.v, port)?;

        let g_na = alu.mul(g_na_m3, s.h);
        let drive_na = alu.sub(s.v, c.e_na);
        let i_na = alu.mul(g_na, drive_na);
        let drive_k = alu.sub(s.v, c.e_k);
        let i_k = alu.mul(g_k_n4, drive_k);
        let i_in = alu.mul(c.gain, i_syn);
        let t1 = alu.sub(i_in, i_na);
        let t2 = alu.sub(t1, i_k);
        let total = alu.sub(t2, i_l);
        let dv = alu.mul(c.dt_over_c, total);
        let v = alu.add(s.v, dv);

        let mut clamps = 0;
        let m = self.gate(s.m, am, bm, alu, &mut clamps);
        let n = self.gate(s.n, an, bn, alu, &mut clamps);
        let h = self.gate(s.h, ah, bh, alu, &mut clamps);

        let above = alu.ge(v, c.v_th);
        let spiked = *reg == 0 && above;
        if spiked {
            *reg = 1;
        } else if *reg != 0 && !alu.ge(v, c.v_rearm) {
            *reg = 0;
        }
        Ok((
            HhState { v, m, n, h },
            StepOutcome {
                spiked,
                clamp_events: clamps,
            },
        ))
    }

    /// Reads the neuron's state from `arr` at `addr`, steps it, and writes it back.
    pub fn update(
        &self,
        model: ModelKind,
        arr: &mut MemArray,
        addr: usize,
        i_syn: Fixed,
        reg: &mut u16,
        alu: &mut Alu,
    ) -> Result<StepOutcome> {
        let n = model.state_words();
        let mut words = [0u32; 4];
        for (j, w) in words.iter_mut().take(n).enumerate() {
            *w = arr.ram_read(addr + j)?;
        }
        let state = NeuronState::from_words(model, &words, self.fmt);
        let (next, out) = self.step(state, i_syn, reg, arr, alu)?;
        for (j, w) in next.to_words().iter().take(n).enumerate() {
            arr.ram_write(addr + j, *w)?;
        }
        Ok(out)
    }

    /// `Δw = +η·e^(−Δt/τ)` for `Δt ≥ 0`, `−η·e^(Δt/τ)` otherwise (one ROM fetch).
    pub fn stdp_delta(&self, delta_t_ms: Fixed, port: &mut impl LutPort, alu: &mut Alu) -> Result<Fixed> {
        let c = &self.stdp;
        let mag = Fixed::from_raw_saturating((delta_t_ms.raw() as i128).abs(), self.fmt).0;
        let scaled = alu.mul(mag, c.inv_tau);
        let zero = Fixed::zero(self.fmt);
        let t = alu.sub(zero, scaled);
        let e = eval_exp(t, self.luts.table(LutKind::Exp)?, port)?;
        let dw = e.scale(c.eta, alu);
        Ok(if delta_t_ms.raw() >= 0 { dw } else { alu.sub(zero, dw) })
    }

    /// STDP update of one post neuron. `synapses` yields `(weight address,
    /// pre-spike step)` for every pre-synapse with a recorded recent spike.
    /// Returns the number of weights updated.
    pub fn apply_plasticity(
        &self,
        arr: &mut MemArray,
        synapses: impl IntoIterator<Item = (usize, u32)>,
        t_post: u32,
        alu: &mut Alu,
    ) -> Result<u64> {
        let mut n = 0;
        for (addr, t_pre) in synapses {
            let w = Fixed::from_word(arr.ram_read(addr)?, self.fmt);
            let steps = t_post as i64 - t_pre as i64;
            let (steps_fx, _) = Fixed::from_raw_saturating((steps as i128) << self.fmt.frac_bits, self.fmt);
            let dt_ms = alu.mul(steps_fx, self.stdp.step_ms);
            let dw = self.stdp_delta(dt_ms, arr, alu)?;
            let sum = alu.add(w, dw);
            let (w, _) = alu.clamp(sum, self.w_min, self.w_max);
            arr.ram_write(addr, w.to_word())?;
            n += 1;
        }
        Ok(n)
    }
}

/// Adds `fanout` consecutive weights starting at `base` to `acc[0..fanout]`.
pub fn synapse_accumulate(
    arr: &mut MemArray,
    base: usize,
    fanout: usize,
    acc: &mut [Fixed],
    alu: &mut Alu,
) -> Result<()> {
    if fanout > acc.len() {
        return Err(Error::Bounds {
            addr: fanout,
            len: acc.len(),
        });
    }
    for (j, a) in acc.iter_mut().take(fanout).enumerate() {
        let w = Fixed::from_word(arr.ram_read(base + j)?, a.format());
        *a = alu.add(*a, w);
    }
    Ok(())
}
