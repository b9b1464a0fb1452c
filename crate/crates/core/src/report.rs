//! Experiment orchestration and energy, area and performance reports.
//!
//! Energy is split into three buckets:
//!
//! * RAM: RAM access energy plus the RAM plane's share of memory leakage;
//! * ROM: ROM access energy (including R-SRAM micro-operations) plus the ROM share of leakage;
//! * Rest: core operations, per-step buffer/control energy, global-memory
//!   traffic and core leakage.
//!
//! Memory leakage is split between RAM and ROM by their share of the array area.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{DatasetKind, ExperimentConfig};
use crate::encoder::{load_cifar10, load_mnist, synthetic, Dataset, RateCodedSource, RateCoder};
use crate::error::{Error, Result};
use crate::mapper::{assign_pes, normalize_layer, ConvLayer, MappedNetwork};
use crate::memory::{array_area, MemCounters, Technology, TechnologyProfile};
use crate::neuron::Dynamics;
use crate::pe::{BlockCounters, Phase};
use crate::scheduler::{Accelerator, RunOutcome};
use crate::spikes::Shape3;

/// Per-operation energy constants of one technology plus the core.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyModel {
    pub profile: TechnologyProfile,
    pub core_op_energy_pj: f64,
    pub control_energy_pj: f64,
    pub core_leakage_mw: f64,
    pub gm_word_energy_pj: f64,
    pub ram_bytes: usize,
    pub rom_bytes: usize,
}

impl EnergyModel {
    pub fn from_config(cfg: &ExperimentConfig, tech: Technology) -> Result<Self> {
        Ok(EnergyModel {
            profile: cfg.profile(tech)?,
            core_op_energy_pj: cfg.pe.core_op_energy_pj,
            control_energy_pj: cfg.pe.control_energy_pj,
            core_leakage_mw: cfg.pe.core_leakage_mw,
            gm_word_energy_pj: cfg.bus.gm_word_energy_pj,
            ram_bytes: cfg.pe.ram_bytes,
            rom_bytes: cfg.pe.rom_bytes(),
        })
    }

    pub fn memory_area_um2(&self) -> Result<f64> {
        array_area(&self.profile, self.ram_bytes, self.rom_bytes)
    }

    /// Leakage power of one PE's memory array.
    pub fn memory_leakage_mw(&self) -> Result<f64> {
        let ram_area = self.profile.area_per_byte_um2 * self.ram_bytes as f64;
        if ram_area == 0.0 {
            return Ok(0.0);
        }
        Ok(self.profile.leakage_mw * self.memory_area_um2()? / ram_area)
    }

    pub fn energy(&self, a: &Activity, pes: usize, makespan_ns: f64) -> Result<EnergyBreakdown> {
        let access = self.profile.access_energy(&a.counters);
        let area = self.memory_area_um2()?;
        let ram_share = if area > 0.0 {
            self.profile.area_per_byte_um2 * self.ram_bytes as f64 / area
        } else {
            1.0
        };
        let mem_leak = pes as f64 * self.memory_leakage_mw()? * makespan_ns;
        let core_leak = pes as f64 * self.core_leakage_mw * makespan_ns;
        let ram_pj = access.ram_pj + mem_leak * ram_share;
        let rom_pj = access.rom_pj + mem_leak * (1.0 - ram_share);
        let rest_pj = a.core_ops as f64 * self.core_op_energy_pj
            + a.pe_steps as f64 * self.control_energy_pj
            + a.gm_words as f64 * self.gm_word_energy_pj
            + core_leak;
        Ok(EnergyBreakdown {
            ram_pj,
            rom_pj,
            rest_pj,
            leakage_pj: mem_leak + core_leak,
            total_pj: ram_pj + rom_pj + rest_pj,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub ram_pj: f64,
    pub rom_pj: f64,
    pub rest_pj: f64,
    /// Portion of the three buckets above that is leakage.
    pub leakage_pj: f64,
    pub total_pj: f64,
}

/// Activity summed over all PEs of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Activity {
    pub counters: MemCounters,
    pub blocks: BlockCounters,
    pub core_ops: u64,
    pub pe_steps: u64,
    pub neuron_updates: u64,
    pub pe_input_spikes: u64,
    pub output_spikes: u64,
    pub plastic_updates: u64,
    pub clamp_events: u64,
    pub saturation_events: u64,
    pub gm_words: u64,
    pub bus_bits: u64,
}

impl Activity {
    pub fn collect(accel: &Accelerator, outcome: &RunOutcome) -> Self {
        let mut a = Activity {
            gm_words: outcome.gm_words(),
            bus_bits: outcome.bus_bits,
            ..Default::default()
        };
        for pe in accel.pes() {
            let s = pe.stats();
            a.counters += pe.counters();
            a.blocks.synapse += s.blocks.synapse;
            a.blocks.neuron += s.blocks.neuron;
            a.blocks.plasticity += s.blocks.plasticity;
            a.blocks.housekeeping += s.blocks.housekeeping;
            a.core_ops += s.core_ops;
            a.pe_steps += s.timesteps;
            a.neuron_updates += s.neuron_updates;
            a.pe_input_spikes += s.input_ones;
            a.output_spikes += s.output_spikes;
            a.plastic_updates += s.plastic_updates;
            a.clamp_events += s.clamp_events;
            a.saturation_events += s.saturation_events;
        }
        a
    }
}

/// One row of `stats.csv`. The column set and order are fixed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub name: String,
    pub tech: Technology,
    pub phase: Phase,
    pub fp: f64,
    pub images: usize,
    pub timesteps: usize,
    pub pes: usize,
    pub ram_reads: u64,
    pub ram_writes: u64,
    pub rom_reads: u64,
    pub rom_seq_ram_reads: u64,
    pub rom_seq_ram_writes: u64,
    pub buffered_row_ops: u64,
    pub core_ops: u64,
    pub pe_steps: u64,
    pub neuron_updates: u64,
    pub synapse_ram_reads: u64,
    pub plasticity_ram_reads: u64,
    pub plastic_updates: u64,
    pub pe_input_spikes: u64,
    pub output_spikes: u64,
    pub gm_words: u64,
    pub bus_bits: u64,
    pub saturation_events: u64,
    pub clamp_events: u64,
    pub ram_pj: f64,
    pub rom_pj: f64,
    pub rest_pj: f64,
    pub leakage_pj: f64,
    pub total_pj: f64,
    pub makespan_ns: f64,
    pub serial_makespan_ns: f64,
    pub pe_area_um2: f64,
    pub area_um2: f64,
    pub norm_ram: Option<f64>,
    pub norm_rom: Option<f64>,
    pub norm_rest: Option<f64>,
    pub norm_total: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 38] = [
    "name",
    "tech",
    "phase",
    "fp",
    "images",
    "timesteps",
    "pes",
    "ram_reads",
    "ram_writes",
    "rom_reads",
    "rom_seq_ram_reads",
    "rom_seq_ram_writes",
    "buffered_row_ops",
    "core_ops",
    "pe_steps",
    "neuron_updates",
    "synapse_ram_reads",
    "plasticity_ram_reads",
    "plastic_updates",
    "pe_input_spikes",
    "output_spikes",
    "gm_words",
    "bus_bits",
    "saturation_events",
    "clamp_events",
    "ram_pj",
    "rom_pj",
    "rest_pj",
    "leakage_pj",
    "total_pj",
    "makespan_ns",
    "serial_makespan_ns",
    "pe_area_um2",
    "area_um2",
    "norm_ram",
    "norm_rom",
    "norm_rest",
    "norm_total",
];

impl RunStats {
    pub fn energy(&self) -> EnergyBreakdown {
        EnergyBreakdown {
            ram_pj: self.ram_pj,
            rom_pj: self.rom_pj,
            rest_pj: self.rest_pj,
            leakage_pj: self.leakage_pj,
            total_pj: self.total_pj,
        }
    }

    fn normalize_to(&mut self, base_total: f64) {
        if base_total > 0.0 {
            self.norm_ram = Some(self.ram_pj / base_total);
            self.norm_rom = Some(self.rom_pj / base_total);
            self.norm_rest = Some(self.rest_pj / base_total);
            self.norm_total = Some(self.total_pj / base_total);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeRecord {
    pub pe_id: usize,
    pub layer: usize,
    pub maps: (usize, usize),
    pub counters: MemCounters,
    pub blocks: BlockCounters,
    pub core_ops: u64,
    pub neuron_updates: u64,
    pub output_spikes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LutRecord {
    pub kind: &'static str,
    pub start_row: usize,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerRecord {
    pub layer: usize,
    pub description: String,
    pub model: String,
    pub out_shape: String,
    pub pes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub stats: RunStats,
    pub network: String,
    pub layers: Vec<LayerRecord>,
    pub luts: Vec<LutRecord>,
    pub rom_words_used: usize,
    pub per_pe: Vec<PeRecord>,
    #[serde(skip)]
    pub config_toml: String,
}

/// Loads or generates the images a run consumes.
pub fn load_dataset(cfg: &ExperimentConfig, shape: Shape3) -> Result<Dataset> {
    let data = match cfg.dataset.kind {
        DatasetKind::Synthetic => synthetic(shape, cfg.images, cfg.seed),
        DatasetKind::Mnist => {
            let path = cfg.dataset.path.as_ref().ok_or_else(|| Error::Config("missing `dataset.path`".into()))?;
            let labels = cfg.dataset.labels.as_ref().map(|l| cfg.resolve(l));
            load_mnist(&cfg.resolve(path), labels.as_deref())?
        }
        DatasetKind::Cifar10 => {
            let path = cfg.dataset.path.as_ref().ok_or_else(|| Error::Config("missing `dataset.path`".into()))?;
            load_cifar10(&cfg.resolve(path))?
        }
    };
    if data.len() < cfg.images {
        return Err(Error::Input(format!("{} images requested, dataset has {}", cfg.images, data.len())));
    }
    if let Some(s) = data.shape().filter(|s| *s != shape) {
        return Err(Error::Input(format!("dataset images are {s}, network input is {shape}")));
    }
    Ok(data)
}

/// Everything needed to run one configuration.
pub struct Experiment {
    pub mapped: MappedNetwork,
    pub dynamics: Arc<Dynamics>,
    pub accelerator: Accelerator,
    pub energy_model: EnergyModel,
}

impl Experiment {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let fmt = cfg.format()?;
        let spec = cfg.network_spec()?;
        let mapped = MappedNetwork::build(spec, cfg.pe.ram_words(), cfg.pe.reserve_words, cfg.seed, fmt)?;
        let dynamics = Arc::new(Dynamics::new(cfg.neuron.clone(), &mapped.models(), fmt, cfg.numerics.exp_k)?);
        let energy_model = EnergyModel::from_config(cfg, cfg.tech)?;
        let accelerator = Accelerator::new(
            &mapped,
            Arc::clone(&dynamics),
            energy_model.profile.clone(),
            cfg.pe.geometry(),
            cfg.phase,
            cfg.scheduler_config(),
        )?;
        Ok(Experiment { mapped, dynamics, accelerator, energy_model })
    }
}

fn run_single(cfg: &ExperimentConfig) -> Result<RunReport> {
    let mut ex = Experiment::build(cfg)?;
    let data = load_dataset(cfg, ex.mapped.spec.input)?;
    let source = RateCodedSource { dataset: &data, coder: RateCoder::new(cfg.fp, cfg.seed)? };
    let outcome = ex.accelerator.run(&source, cfg.images, cfg.timesteps)?;
    let activity = Activity::collect(&ex.accelerator, &outcome);
    let pes = ex.mapped.pe_count();
    let e = ex.energy_model.energy(&activity, pes, outcome.timing.makespan_ns)?;
    let pe_area = ex.energy_model.memory_area_um2()? + cfg.pe.core_area_um2;
    let c = activity.counters;
    let stats = RunStats {
        name: cfg.name.clone(),
        tech: cfg.tech,
        phase: cfg.phase,
        fp: cfg.fp,
        images: cfg.images,
        timesteps: cfg.timesteps,
        pes,
        ram_reads: c.ram_reads,
        ram_writes: c.ram_writes,
        rom_reads: c.rom_reads,
        rom_seq_ram_reads: c.rom_seq_ram_reads,
        rom_seq_ram_writes: c.rom_seq_ram_writes,
        buffered_row_ops: c.buffered_row_ops,
        core_ops: activity.core_ops,
        pe_steps: activity.pe_steps,
        neuron_updates: activity.neuron_updates,
        synapse_ram_reads: activity.blocks.synapse.ram_reads,
        plasticity_ram_reads: activity.blocks.plasticity.ram_reads,
        plastic_updates: activity.plastic_updates,
        pe_input_spikes: activity.pe_input_spikes,
        output_spikes: activity.output_spikes,
        gm_words: activity.gm_words,
        bus_bits: activity.bus_bits,
        saturation_events: activity.saturation_events,
        clamp_events: activity.clamp_events,
        ram_pj: e.ram_pj,
        rom_pj: e.rom_pj,
        rest_pj: e.rest_pj,
        leakage_pj: e.leakage_pj,
        total_pj: e.total_pj,
        makespan_ns: outcome.timing.makespan_ns,
        serial_makespan_ns: outcome.timing.serial_makespan_ns,
        pe_area_um2: pe_area,
        area_um2: pe_area * pes as f64,
        norm_ram: None,
        norm_rom: None,
        norm_rest: None,
        norm_total: None,
    };
    let layers = ex
        .mapped
        .layers
        .iter()
        .zip(&ex.mapped.assignments)
        .map(|(l, a)| LayerRecord {
            layer: l.index,
            description: describe_layer(l),
            model: l.model.name().to_owned(),
            out_shape: l.out_shape.to_string(),
            pes: a.pes.len(),
        })
        .collect();
    let image = ex.dynamics.luts().image();
    let luts = image
        .directory()
        .entries()
        .iter()
        .map(|e| LutRecord { kind: e.kind.name(), start_row: e.start_row, rows: e.row_count })
        .collect();
    let per_pe = ex
        .accelerator
        .pes()
        .map(|pe| {
            let s = pe.stats();
            PeRecord {
                pe_id: pe.config().pe_id,
                layer: pe.config().layer_tag,
                maps: (pe.config().maps.start, pe.config().maps.end),
                counters: pe.counters(),
                blocks: s.blocks,
                core_ops: s.core_ops,
                neuron_updates: s.neuron_updates,
                output_spikes: s.output_spikes,
            }
        })
        .collect();
    Ok(RunReport {
        stats,
        network: ex.mapped.spec.to_string(),
        layers,
        luts,
        rom_words_used: image.len_words(),
        per_pe,
        config_toml: cfg.to_toml(),
    })
}

fn describe_layer(l: &ConvLayer) -> String {
    format!(
        "{:?} {} -> {}x{}x{}{} stride {} ({} windows)",
        l.source,
        l.in_shape,
        l.kh,
        l.kw,
        if l.depthwise { 1 } else { l.in_shape.c },
        if l.depthwise { " depthwise" } else { "" },
        l.stride,
        l.windows()
    )
}

/// Runs the configured experiment and, if a baseline is named, normalizes to it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut report = run_single(cfg)?;
    if let Some(b) = &cfg.baseline {
        let mut base = cfg.clone();
        base.baseline = None;
        base.tech = b.tech.unwrap_or(cfg.tech);
        base.fp = b.fp.unwrap_or(cfg.fp);
        base.phase = b.phase.unwrap_or(cfg.phase);
        let total = if (base.tech, base.fp, base.phase) == (cfg.tech, cfg.fp, cfg.phase) {
            report.stats.total_pj
        } else {
            run_single(&base)?.stats.total_pj
        };
        report.stats.normalize_to(total);
    }
    Ok(report)
}

/// Runs the configuration for every `(tech, fp)` combination, tech-major.
pub fn sweep(cfg: &ExperimentConfig, fps: &[f64], techs: &[Technology]) -> Result<Vec<RunReport>> {
    let mut out = Vec::with_capacity(fps.len() * techs.len());
    for &tech in techs {
        for &fp in fps {
            let mut c = cfg.clone();
            c.tech = tech;
            c.fp = fp;
            out.push(run_experiment(&c)?);
        }
    }
    Ok(out)
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[&RunStats]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Input(format!("csv: {e}")))?;
    }
    if rows.is_empty() {
        wr.write_record(CSV_COLUMNS).map_err(|e| Error::Input(format!("csv: {e}")))?;
    }
    wr.flush().map_err(|e| Error::io("stats.csv", e))?;
    Ok(())
}

pub fn csv_string(reports: &[RunReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, &reports.iter().map(|r| &r.stats).collect::<Vec<_>>())?;
    String::from_utf8(buf).map_err(|e| Error::Input(e.to_string()))
}

pub fn text_report(r: &RunReport) -> String {
    let s = &r.stats;
    let mut o = String::new();
    let _ = writeln!(o, "== run {} ==", if s.name.is_empty() { "(unnamed)" } else { &s.name });
    let _ = writeln!(o, "network   {}", r.network);
    let _ = writeln!(o, "tech      {}   phase {}   fp {}", s.tech, s.phase, s.fp);
    let _ = writeln!(o, "images    {} x {} time-steps on {} PEs", s.images, s.timesteps, s.pes);
    let _ = writeln!(o, "\nlayers");
    for l in &r.layers {
        let _ = writeln!(o, "  {:>2}  {:<4} {:<48} out {:<10} PEs {}", l.layer, l.model, l.description, l.out_shape, l.pes);
    }
    let _ = writeln!(o, "\nLUT directory ({} ROM words)", r.rom_words_used);
    for l in &r.luts {
        let _ = writeln!(o, "  {:<22} rows {:>6} .. {:>6}", l.kind, l.start_row, l.start_row + l.rows);
    }
    let _ = writeln!(o, "\naccesses");
    let _ = writeln!(o, "  ram reads {}  ram writes {}  rom reads {}", s.ram_reads, s.ram_writes, s.rom_reads);
    let _ = writeln!(
        o,
        "  rom micro-ops: {} ram reads, {} ram writes, {} buffered row ops",
        s.rom_seq_ram_reads, s.rom_seq_ram_writes, s.buffered_row_ops
    );
    let _ = writeln!(
        o,
        "  synapse reads {}  plasticity reads {}  neuron updates {}  core ops {}",
        s.synapse_ram_reads, s.plasticity_ram_reads, s.neuron_updates, s.core_ops
    );
    let _ = writeln!(o, "  spikes in (per PE) {}  out {}", s.pe_input_spikes, s.output_spikes);
    let _ = writeln!(o, "\nenergy (pJ)");
    let pct = |x: f64| if s.total_pj > 0.0 { 100.0 * x / s.total_pj } else { 0.0 };
    let _ = writeln!(o, "  RAM   {:>16.3}  {:>5.1}%", s.ram_pj, pct(s.ram_pj));
    let _ = writeln!(o, "  ROM   {:>16.3}  {:>5.1}%", s.rom_pj, pct(s.rom_pj));
    let _ = writeln!(o, "  Rest  {:>16.3}  {:>5.1}%", s.rest_pj, pct(s.rest_pj));
    let _ = writeln!(o, "  total {:>16.3}  (leakage {:.3})", s.total_pj, s.leakage_pj);
    if let Some(n) = s.norm_total {
        let _ = writeln!(o, "  normalized total {n:.6}");
    }
    let _ = writeln!(o, "\ntiming");
    let _ = writeln!(
        o,
        "  makespan {:.1} ns pipelined, {:.1} ns serial ({:.2}x)",
        s.makespan_ns,
        s.serial_makespan_ns,
        if s.makespan_ns > 0.0 { s.serial_makespan_ns / s.makespan_ns } else { 1.0 }
    );
    let _ = writeln!(o, "\narea  {:.1} um^2 per PE, {:.1} um^2 total", s.pe_area_um2, s.area_um2);
    let _ = writeln!(o, "\nconfiguration\n{}", r.config_toml);
    o
}

/// Writes `stats.csv` and `report.txt` (and `stats.json`) into `dir`.
pub fn write_outputs(dir: &Path, reports: &[RunReport], json: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("stats.csv");
    std::fs::write(&csv_path, csv_string(reports)?).map_err(|e| Error::io(&csv_path, e))?;
    let txt_path = dir.join("report.txt");
    let text: String = reports.iter().map(text_report).collect::<Vec<_>>().join("\n");
    std::fs::write(&txt_path, text).map_err(|e| Error::io(&txt_path, e))?;
    if json {
        let path = dir.join("stats.json");
        let body = serde_json::to_string_pretty(reports).map_err(|e| Error::Input(e.to_string()))?;
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TechArea {
    pub tech: Technology,
    pub memory_um2: f64,
    pub pe_um2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AreaReport {
    pub ram_bytes: usize,
    pub rom_bytes: usize,
    pub core_area_um2: f64,
    pub techs: Vec<TechArea>,
    pub sram_over_rsram: f64,
    pub stt_over_rmram: f64,
}

impl AreaReport {
    pub fn pe_area(&self, tech: Technology) -> f64 {
        self.techs.iter().find(|t| t.tech == tech).map(|t| t.pe_um2).unwrap_or(f64::NAN)
    }

    pub fn ratio(&self, base: Technology) -> f64 {
        self.pe_area(base) / self.pe_area(base.counterpart())
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(
            o,
            "iso-storage PE area: {} B RAM + {} B ROM, core {} um^2",
            self.ram_bytes, self.rom_bytes, self.core_area_um2
        );
        for t in &self.techs {
            let _ = writeln!(o, "  {:<6} memory {:>14.1} um^2   PE {:>14.1} um^2", t.tech.name(), t.memory_um2, t.pe_um2);
        }
        let _ = writeln!(o, "  sram/rsram {:.4}", self.sram_over_rsram);
        let _ = writeln!(o, "  stt/rmram  {:.4}", self.stt_over_rmram);
        o
    }
}

/// Per-PE area of every technology holding the configured RAM and ROM.
pub fn area_report(cfg: &ExperimentConfig) -> Result<AreaReport> {
    let (ram, rom) = (cfg.pe.ram_bytes, cfg.pe.rom_bytes());
    let techs = Technology::ALL
        .iter()
        .map(|&t| {
            let memory_um2 = array_area(&cfg.profile(t)?, ram, rom)?;
            Ok(TechArea { tech: t, memory_um2, pe_um2: memory_um2 + cfg.pe.core_area_um2 })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = AreaReport {
        ram_bytes: ram,
        rom_bytes: rom,
        core_area_um2: cfg.pe.core_area_um2,
        techs,
        sram_over_rsram: 0.0,
        stt_over_rmram: 0.0,
    };
    r.sram_over_rsram = r.ratio(Technology::Sram);
    r.stt_over_rmram = r.ratio(Technology::SttMram);
    Ok(r)
}

/// Work of one layer per time-step and how many PEs it can use.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerLoad {
    pub layer: usize,
    /// Memory accesses per time-step.
    pub work: f64,
    pub max_pes: Option<usize>,
}

/// Best pipelined throughput (time-steps per access unit) of `pes` PEs,
/// treating PEs as divisible. Each layer gets `min(cap, θ·work)` PEs with θ
/// chosen so that all PEs are used; throughput is the slowest layer's rate.
pub fn fluid_throughput(loads: &[LayerLoad], pes: f64) -> f64 {
    if loads.is_empty() || pes <= 0.0 {
        return 0.0;
    }
    let mut order: Vec<&LayerLoad> = loads.iter().collect();
    let ratio = |l: &LayerLoad| l.max_pes.map_or(f64::INFINITY, |c| c as f64 / l.work);
    order.sort_by(|a, b| ratio(a).total_cmp(&ratio(b)));
    let mut rem_p = pes;
    let mut rem_w: f64 = loads.iter().map(|l| l.work).sum();
    let mut theta = f64::INFINITY;
    for l in &order {
        let candidate = rem_p / rem_w;
        if candidate <= ratio(l) {
            theta = candidate;
            break;
        }
        rem_p -= l.max_pes.map_or(0.0, |c| c as f64);
        rem_w -= l.work;
    }
    loads
        .iter()
        .map(|l| l.max_pes.map_or(theta, |c| (c as f64 / l.work).min(theta)))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerfPair {
    pub base: Technology,
    pub embedded: Technology,
    pub chip_area_um2: f64,
    pub base_pes: f64,
    pub embedded_pes: f64,
    pub base_pes_whole: u64,
    pub embedded_pes_whole: u64,
    pub base_throughput: f64,
    pub embedded_throughput: f64,
    pub speedup: f64,
    pub area_ratio: f64,
    /// Whether the mapped network fits on the chip at all.
    pub base_fits: bool,
    pub embedded_fits: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerfReport {
    pub mapped_pes: usize,
    pub layers: Vec<LayerLoad>,
    pub pairs: Vec<PerfPair>,
}

impl PerfReport {
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "iso-area projection (network maps onto {} PEs)", self.mapped_pes);
        for l in &self.layers {
            let cap = l.max_pes.map_or("unlimited".to_owned(), |c| c.to_string());
            let _ = writeln!(o, "  layer {:>2}  work {:>14.1}  max PEs {}", l.layer, l.work, cap);
        }
        for p in &self.pairs {
            let _ = writeln!(
                o,
                "  {}/{}: chip {:.1} um^2, PEs {:.2} vs {:.2} ({} vs {} whole), speedup {:.4}, area ratio {:.4}",
                p.embedded.name(),
                p.base.name(),
                p.chip_area_um2,
                p.embedded_pes,
                p.base_pes,
                p.embedded_pes_whole,
                p.base_pes_whole,
                p.speedup,
                p.area_ratio
            );
        }
        o
    }
}

/// Layer loads of the configured network.
pub fn layer_loads(cfg: &ExperimentConfig, layers: &[ConvLayer]) -> Vec<LayerLoad> {
    layers
        .iter()
        .map(|l| {
            let c = l.model.contract();
            let per_neuron = (c.rom_reads + c.ram_reads + c.ram_writes) as f64;
            let fanout = if l.depthwise { 1.0 } else { l.out_maps as f64 };
            let work = l.neurons() as f64 * per_neuron + cfg.perf.activity * l.scatter_bits() as f64 * fanout;
            let max_pes = if cfg.perf.unlimited_parallelism {
                None
            } else {
                Some(cfg.perf.max_pes_per_layer.map_or(l.out_maps, |m| m.min(l.out_maps)))
            };
            LayerLoad { layer: l.index, work, max_pes }
        })
        .collect()
}

/// Throughput of each ROM-embedded technology against its plain counterpart on the same chip area.
pub fn perf_report(cfg: &ExperimentConfig) -> Result<PerfReport> {
    let spec = cfg.network_spec()?;
    let layers = spec
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| normalize_layer(l, i))
        .collect::<Result<Vec<_>>>()?;
    let mapped_pes: usize = assign_pes(&layers, cfg.pe.ram_words(), cfg.pe.reserve_words)?
        .iter()
        .map(|a| a.pes.len())
        .sum();
    let loads = layer_loads(cfg, &layers);
    let area = area_report(cfg)?;
    let pairs = [(Technology::Sram, Technology::RSram), (Technology::SttMram, Technology::RMram)]
        .into_iter()
        .map(|(base, embedded)| {
            let (a_base, a_emb) = (area.pe_area(base), area.pe_area(embedded));
            let chip = cfg.perf.chip_area_um2.unwrap_or(mapped_pes as f64 * a_base);
            let (p_base, p_emb) = (chip / a_base, chip / a_emb);
            let (t_base, t_emb) = (fluid_throughput(&loads, p_base), fluid_throughput(&loads, p_emb));
            PerfPair {
                base,
                embedded,
                chip_area_um2: chip,
                base_pes: p_base,
                embedded_pes: p_emb,
                base_pes_whole: p_base.floor() as u64,
                embedded_pes_whole: p_emb.floor() as u64,
                base_throughput: t_base,
                embedded_throughput: t_emb,
                speedup: t_emb / t_base,
                area_ratio: a_base / a_emb,
                base_fits: p_base.floor() as usize >= mapped_pes,
                embedded_fits: p_emb.floor() as usize >= mapped_pes,
            }
        })
        .collect();
    Ok(PerfReport { mapped_pes, layers: loads, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use proptest::prelude::*;

    fn cfg(text: &str) -> ExperimentConfig {
        parse_config(text, Path::new(".")).unwrap()
    }

    #[test]
    fn csv_header_is_the_documented_schema() {
        let r = run_experiment(&cfg("network = \"6x6x1-3o\"\nimages = 2\ntimesteps = 4")).unwrap();
        let text = csv_string(std::slice::from_ref(&r)).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn inference_has_no_plasticity() {
        let r = run_experiment(&cfg("network = \"6x6x1-3o\"\nimages = 2\ntimesteps = 8")).unwrap();
        assert_eq!(r.stats.plasticity_ram_reads, 0);
        assert_eq!(r.stats.plastic_updates, 0);
    }

    #[test]
    fn buckets_sum_to_total_and_stt_leaks_nothing() {
        let mut c = cfg("network = \"8x8x1-2c3-2s-4o\"\nimages = 2\ntimesteps = 6\ntech = \"stt\"\n[pe]\ncore_leakage_mw = 0.0");
        let r = run_experiment(&c).unwrap().stats;
        assert_eq!(r.leakage_pj, 0.0);
        assert!((r.ram_pj + r.rom_pj + r.rest_pj - r.total_pj).abs() <= 1e-9 * r.total_pj);
        c.tech = Technology::Sram;
        let s = run_experiment(&c).unwrap().stats;
        assert!(s.leakage_pj > 0.0);
        assert_eq!(s.ram_reads, r.ram_reads);
    }

    #[test]
    fn baseline_normalization() {
        let r = run_experiment(&cfg(
            "network = \"6x6x1-3o\"\nimages = 2\ntimesteps = 4\ntech = \"sram\"\n[baseline]\ntech = \"rmram\"",
        ))
        .unwrap()
        .stats;
        let b = run_experiment(&cfg("network = \"6x6x1-3o\"\nimages = 2\ntimesteps = 4\ntech = \"rmram\"")).unwrap().stats;
        assert!((r.norm_total.unwrap() - r.total_pj / b.total_pj).abs() < 1e-12);
        let same = run_experiment(&cfg("network = \"6x6x1-3o\"\nimages = 2\ntimesteps = 4\n[baseline]\n")).unwrap();
        assert_eq!(same.stats.norm_total, Some(1.0));
    }

    #[test]
    fn area_ratio_limits() {
        let mut c = cfg("network = \"4-2o\"\n[pe]\ncore_area_um2 = 0.0\n[technology.rmram]\nrom_periph_overhead = 0.0");
        let a = area_report(&c).unwrap();
        assert!((a.stt_over_rmram - 2.0).abs() < 1e-12);
        c.pe.rom_ratio = 0.0;
        let a = area_report(&c).unwrap();
        assert_eq!(a.sram_over_rsram, 1.0);
        assert_eq!(a.stt_over_rmram, 1.0);
    }

    #[test]
    fn single_neuron_layer_cannot_speed_up() {
        let r = perf_report(&cfg("network = \"16-1o\"")).unwrap();
        for p in &r.pairs {
            assert!((p.speedup - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unlimited_parallelism_gives_area_ratio() {
        let r = perf_report(&cfg("network = \"28x28x1-400o\"\n[perf]\nunlimited_parallelism = true")).unwrap();
        for p in &r.pairs {
            assert!((p.speedup / p.area_ratio - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn fluid_speedup_never_exceeds_pe_ratio(
            layers in prop::collection::vec((1.0f64..1e4, prop::option::of(1usize..50)), 1..6),
            p in 1.0f64..200.0,
            r in 1.0f64..3.0,
        ) {
            let loads: Vec<LayerLoad> = layers
                .iter()
                .enumerate()
                .map(|(i, &(work, max_pes))| LayerLoad { layer: i, work, max_pes })
                .collect();
            let (a, b) = (fluid_throughput(&loads, p), fluid_throughput(&loads, p * r));
            prop_assert!(b >= a * (1.0 - 1e-12));
            prop_assert!(b <= a * r * (1.0 + 1e-12));
            let used: f64 = loads.iter().map(|l| l.max_pes.map_or(a * l.work, |c| (a * l.work).min(c as f64))).sum();
            prop_assert!(used <= p * (1.0 + 1e-9));
        }
    }
}
