//! Experiment configuration (TOML).
//!
//! Every table rejects unknown keys. Only the network is required; it is
//! given inline as `network = "28x28x1-400o"` or as `network_file`, a path
//! relative to the config file. Everything else has a default.
//!
//! ```toml
//! network = "28x28x1-400o"
//! models = ["lif"]          # one entry, or one per layer
//! tech = "rmram"            # sram | rsram | stt | rmram
//! phase = "inference"       # or "training"
//! fp = 0.4
//! timesteps = 35
//! images = 100
//! seed = 1
//!
//! [dataset]                 # kind = "synthetic" | "mnist" | "cifar10"
//! [numerics]                # q_int, q_frac, exp_k
//! [pe]                      # ram_bytes, rom_ratio, row_width, reserve_words, core constants
//! [bus]                     # width_bits, cycle_ns, gm_word_energy_pj
//! [execution]               # parallel, threads, reverse_pe_order
//! [neuron.lif]              # also neuron.izhikevich, neuron.hh, neuron.stdp
//! [technology.rsram]        # per-technology cost overrides
//! [perf]                    # chip_area_um2, unlimited_parallelism, activity, max_pes_per_layer
//! [baseline]                # tech/fp/phase of the normalization run
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::QFormat;
use crate::lut::MAX_EXP_K;
use crate::mapper::{parse_network, NetworkSpec};
use crate::memory::{MemGeometry, Technology, TechnologyProfile, WORD_BYTES};
use crate::neuron::{ModelKind, NeuronParams};
use crate::pe::Phase;
use crate::scheduler::SchedulerConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    #[default]
    Synthetic,
    Mnist,
    Cifar10,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// IDX image file (mnist) or binary batch (cifar10).
    pub path: Option<PathBuf>,
    /// IDX label file (mnist).
    pub labels: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub q_int: u8,
    pub q_frac: u8,
    pub exp_k: u32,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig { q_int: 15, q_frac: 16, exp_k: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeParams {
    pub ram_bytes: usize,
    /// ROM capacity as a fraction of RAM capacity.
    pub rom_ratio: f64,
    pub row_width: usize,
    pub reserve_words: usize,
    pub core_area_um2: f64,
    pub core_op_energy_pj: f64,
    /// Buffer and controller energy per PE per time-step.
    pub control_energy_pj: f64,
    pub core_leakage_mw: f64,
    pub core_op_cycles: f64,
}

impl Default for PeParams {
    fn default() -> Self {
        PeParams {
            ram_bytes: 65536,
            rom_ratio: 1.0,
            row_width: 16,
            reserve_words: 0,
            core_area_um2: 3000.0,
            core_op_energy_pj: 0.1,
            control_energy_pj: 2.0,
            core_leakage_mw: 0.01,
            core_op_cycles: 1.0,
        }
    }
}

impl PeParams {
    pub fn ram_words(&self) -> usize {
        self.ram_bytes / WORD_BYTES
    }

    pub fn rom_words(&self) -> usize {
        (self.ram_words() as f64 * self.rom_ratio).round() as usize
    }

    pub fn rom_bytes(&self) -> usize {
        self.rom_words() * WORD_BYTES
    }

    pub fn geometry(&self) -> MemGeometry {
        MemGeometry {
            ram_words: self.ram_words(),
            rom_words: self.rom_words(),
            row_width: self.row_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BusParams {
    pub width_bits: usize,
    pub cycle_ns: f64,
    /// Global-memory energy per 32-bit word moved.
    pub gm_word_energy_pj: f64,
}

impl Default for BusParams {
    fn default() -> Self {
        BusParams { width_bits: 32, cycle_ns: 1.0, gm_word_energy_pj: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionConfig {
    pub parallel: bool,
    pub threads: usize,
    pub reverse_pe_order: bool,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        ExecutionConfig { parallel: true, threads: 0, reverse_pe_order: false }
    }
}

/// Replaces selected fields of a shipped technology profile.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechOverride {
    pub ram_read_energy_pj: Option<f64>,
    pub ram_read_latency_ns: Option<f64>,
    pub ram_write_energy_pj: Option<f64>,
    pub ram_write_latency_ns: Option<f64>,
    pub rom_read_energy_pj: Option<f64>,
    pub rom_read_latency_ns: Option<f64>,
    pub leakage_mw: Option<f64>,
    pub area_per_byte_um2: Option<f64>,
    pub rom_overhead_factor: Option<f64>,
    pub rom_periph_overhead: Option<f64>,
}

impl TechOverride {
    pub fn apply(&self, p: &mut TechnologyProfile) {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut p.ram_read.energy_pj, self.ram_read_energy_pj);
        set(&mut p.ram_read.latency_ns, self.ram_read_latency_ns);
        set(&mut p.ram_write.energy_pj, self.ram_write_energy_pj);
        set(&mut p.ram_write.latency_ns, self.ram_write_latency_ns);
        set(&mut p.rom_read.energy_pj, self.rom_read_energy_pj);
        set(&mut p.rom_read.latency_ns, self.rom_read_latency_ns);
        set(&mut p.leakage_mw, self.leakage_mw);
        set(&mut p.area_per_byte_um2, self.area_per_byte_um2);
        set(&mut p.rom_overhead_factor, self.rom_overhead_factor);
        set(&mut p.rom_periph_overhead, self.rom_periph_overhead);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerfConfig {
    /// Chip area for the iso-area projection; defaults to the area the
    /// network occupies on the plain technology of each pair.
    pub chip_area_um2: Option<f64>,
    pub unlimited_parallelism: bool,
    /// Expected fraction of input bits that are spikes.
    pub activity: f64,
    pub max_pes_per_layer: Option<usize>,
}

impl Default for PerfConfig {
    fn default() -> Self {
        PerfConfig {
            chip_area_um2: None,
            unlimited_parallelism: false,
            activity: 0.1,
            max_pes_per_layer: None,
        }
    }
}

/// The run all energies are normalized to. Unset fields follow the main run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub tech: Option<Technology>,
    pub fp: Option<f64>,
    pub phase: Option<Phase>,
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Lif]
}
fn default_tech() -> Technology {
    Technology::RMram
}
fn default_fp() -> f64 {
    1.0
}
fn default_timesteps() -> usize {
    35
}
fn default_images() -> usize {
    10
}
fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_file: Option<PathBuf>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_tech")]
    pub tech: Technology,
    #[serde(default)]
    pub phase: Phase,
    #[serde(default = "default_fp")]
    pub fp: f64,
    #[serde(default = "default_timesteps")]
    pub timesteps: usize,
    #[serde(default = "default_images")]
    pub images: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub pe: PeParams,
    #[serde(default)]
    pub bus: BusParams,
    #[serde(default)]
    pub execution: ExecutionConfig,
    #[serde(default)]
    pub neuron: NeuronParams,
    #[serde(default)]
    pub technology: BTreeMap<Technology, TechOverride>,
    #[serde(default)]
    pub perf: PerfConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Configuration with defaults everywhere and the given network.
    pub fn with_network(network: &str) -> Self {
        parse_config(&format!("network = {network:?}"), Path::new(".")).expect("inline network config")
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.network, &self.network_file) {
            (None, None) => return Err(Error::Config("missing required key `network` (or `network_file`)".into())),
            (Some(_), Some(_)) => {
                return Err(Error::Config("`network` and `network_file` are mutually exclusive".into()))
            }
            _ => {}
        }
        if !(self.fp > 0.0 && self.fp <= 1.0) {
            return Err(Error::Range { value: self.fp, min: 0.0, max: 1.0 });
        }
        if let Some(fp) = self.baseline.as_ref().and_then(|b| b.fp) {
            if !(fp > 0.0 && fp <= 1.0) {
                return Err(Error::Range { value: fp, min: 0.0, max: 1.0 });
            }
        }
        if self.timesteps == 0 || self.images == 0 {
            return Err(Error::Config("`timesteps` and `images` must be positive".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("`models` must list at least one model".into()));
        }
        let pe = &self.pe;
        if pe.ram_bytes == 0 || pe.ram_bytes % WORD_BYTES != 0 {
            return Err(Error::Config(format!("pe.ram_bytes = {} is not a positive multiple of {WORD_BYTES}", pe.ram_bytes)));
        }
        if !(pe.rom_ratio.is_finite() && pe.rom_ratio >= 0.0) {
            return Err(Error::Config("pe.rom_ratio must be non-negative".into()));
        }
        if pe.row_width == 0 {
            return Err(Error::Config("pe.row_width must be positive".into()));
        }
        for (key, v) in [
            ("pe.core_area_um2", pe.core_area_um2),
            ("pe.core_op_energy_pj", pe.core_op_energy_pj),
            ("pe.control_energy_pj", pe.control_energy_pj),
            ("pe.core_leakage_mw", pe.core_leakage_mw),
            ("bus.gm_word_energy_pj", self.bus.gm_word_energy_pj),
            ("perf.activity", self.perf.activity),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{key} = {v} must be finite and non-negative")));
            }
        }
        if self.perf.chip_area_um2.is_some_and(|a| !(a.is_finite() && a > 0.0)) {
            return Err(Error::Config("perf.chip_area_um2 must be positive".into()));
        }
        if self.numerics.exp_k > MAX_EXP_K {
            return Err(Error::Config(format!("numerics.exp_k must be at most {MAX_EXP_K}")));
        }
        self.format()?;
        self.neuron.validate()?;
        self.scheduler_config().validate()?;
        for tech in Technology::ALL {
            self.profile(tech)?;
        }
        if self.dataset.kind != DatasetKind::Synthetic && self.dataset.path.is_none() {
            return Err(Error::Config("missing required key `dataset.path`".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn network_text(&self) -> Result<String> {
        match (&self.network, &self.network_file) {
            (Some(n), _) => Ok(n.clone()),
            (None, Some(f)) => {
                let path = self.resolve(f);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                text.lines()
                    .map(|l| l.split('#').next().unwrap_or("").trim())
                    .find(|l| !l.is_empty())
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Config(format!("{} holds no network description", path.display())))
            }
            (None, None) => Err(Error::Config("missing required key `network` (or `network_file`)".into())),
        }
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        parse_network(&self.network_text()?, &self.models)
    }

    pub fn format(&self) -> Result<QFormat> {
        QFormat::new(self.numerics.q_int, self.numerics.q_frac)
            .map_err(|e| Error::Config(format!("numerics: {e}")))
    }

    /// Shipped profile of `tech` with this config's overrides applied.
    pub fn profile(&self, tech: Technology) -> Result<TechnologyProfile> {
        let mut p = TechnologyProfile::default_for(tech);
        if let Some(o) = self.technology.get(&tech) {
            o.apply(&mut p);
        }
        p.validate()
            .map_err(|e| Error::Config(format!("technology.{}: {e}", tech.name())))?;
        Ok(p)
    }

    pub fn scheduler_config(&self) -> SchedulerConfig {
        SchedulerConfig {
            bus_width_bits: self.bus.width_bits,
            cycle_ns: self.bus.cycle_ns,
            core_op_cycles: self.pe.core_op_cycles,
            parallel: self.execution.parallel,
            reverse_pe_order: self.execution.reverse_pe_order,
            threads: self.execution.threads,
        }
    }

    /// The configuration as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# cannot render config: {e}\n"))
    }
}

/// Parses and validates a config; relative paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
