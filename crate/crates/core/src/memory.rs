//! Behavioral and cost model of the PE memory: SRAM, ROM-embedded SRAM,
//! STT-MRAM, and ROM-embedded MRAM.
//!
//! A [`MemArray`] keeps word contents and access counters. Energies and busy
//! time are never accumulated incrementally; they are derived from the
//! counters and the [`TechnologyProfile`] so that a report can always be
//! recomputed from counts.
//!
//! ROM data of the embedded technologies shares the RAM cells:
//!
//! * R-SRAM: reading a ROM row destroys the RAM row, so the array saves the
//!   row to a buffer, writes all ones, writes zeros with only WL2 active,
//!   reads the row, and restores the buffer. Every micro-op is counted.
//! * R-MRAM: the ROM row is sensed through the second bit line; RAM data is
//!   untouched and no RAM micro-ops are issued.
//!
//! Plain SRAM and STT-MRAM have no ROM plane. A PE built on them keeps its
//! LUTs in a dedicated ROM array attached with [`MemArray::with_rom`], whose
//! reads cost `rom_read` of the profile.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lut::{LutDirectory, LutKind, LutPort, RomImage};

pub const WORD_BYTES: usize = 4;
pub const DEFAULT_ROW_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technology {
    #[serde(rename = "sram")]
    Sram,
    #[serde(rename = "rsram", alias = "r_sram")]
    RSram,
    #[serde(rename = "stt", alias = "stt_mram")]
    SttMram,
    #[serde(rename = "rmram", alias = "r_mram")]
    RMram,
}

impl Technology {
    pub const ALL: [Technology; 4] = [
        Technology::Sram,
        Technology::RSram,
        Technology::SttMram,
        Technology::RMram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technology::Sram => "sram",
            Technology::RSram => "rsram",
            Technology::SttMram => "stt",
            Technology::RMram => "rmram",
        }
    }

    pub fn has_embedded_rom(self) -> bool {
        matches!(self, Technology::RSram | Technology::RMram)
    }

    /// The conventional technology an embedded one is compared against, and vice versa.
    pub fn counterpart(self) -> Technology {
        match self {
            Technology::Sram => Technology::RSram,
            Technology::RSram => Technology::Sram,
            Technology::SttMram => Technology::RMram,
            Technology::RMram => Technology::SttMram,
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sram" => Ok(Technology::Sram),
            "rsram" | "r_sram" | "r-sram" => Ok(Technology::RSram),
            "stt" | "stt_mram" | "stt-mram" => Ok(Technology::SttMram),
            "rmram" | "r_mram" | "r-mram" => Ok(Technology::RMram),
            other => Err(Error::Config(format!("unknown technology `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessCost {
    pub energy_pj: f64,
    pub latency_ns: f64,
}

impl AccessCost {
    pub const fn new(energy_pj: f64, latency_ns: f64) -> Self {
        AccessCost {
            energy_pj,
            latency_ns,
        }
    }
}

/// Per-technology access costs, leakage, and area parameters.
///
/// Costs are per array access (one row activation). The shipped defaults are
/// placeholders that respect the qualitative orderings of the technologies:
/// STT writes cost more than SRAM writes and STT-based arrays do not leak.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TechnologyProfile {
    pub tech: Technology,
    pub ram_read: AccessCost,
    pub ram_write: AccessCost,
    /// R-MRAM: ROM-mode sense. Plain technologies: read of the dedicated ROM
    /// array. R-SRAM: extra ROM-mode control cost on top of the micro-ops.
    pub rom_read: AccessCost,
    pub leakage_mw: f64,
    pub area_per_byte_um2: f64,
    /// Array-level area factor of embedding ROM (applied when ROM is present).
    pub rom_overhead_factor: f64,
    /// Fractional area of ROM-mode peripheral circuits (applied when ROM is present).
    pub rom_periph_overhead: f64,
}

impl TechnologyProfile {
    pub fn default_for(tech: Technology) -> Self {
        match tech {
            Technology::Sram => TechnologyProfile {
                tech,
                ram_read: AccessCost::new(5.0, 1.0),
                ram_write: AccessCost::new(5.5, 1.0),
                rom_read: AccessCost::new(4.5, 1.0),
                leakage_mw: 2.0,
                area_per_byte_um2: 4.0,
                rom_overhead_factor: 1.0,
                rom_periph_overhead: 0.0,
            },
            Technology::RSram => TechnologyProfile {
                tech,
                ram_read: AccessCost::new(5.0, 1.0),
                ram_write: AccessCost::new(5.5, 1.0),
                rom_read: AccessCost::new(0.0, 0.0),
                leakage_mw: 2.0,
                area_per_byte_um2: 4.0,
                rom_overhead_factor: 1.02,
                rom_periph_overhead: 0.0,
            },
            Technology::SttMram => TechnologyProfile {
                tech,
                ram_read: AccessCost::new(4.0, 2.0),
                ram_write: AccessCost::new(20.0, 10.0),
                rom_read: AccessCost::new(3.5, 2.0),
                leakage_mw: 0.0,
                area_per_byte_um2: 1.2,
                rom_overhead_factor: 1.0,
                rom_periph_overhead: 0.0,
            },
            Technology::RMram => TechnologyProfile {
                tech,
                ram_read: AccessCost::new(4.0, 2.0),
                ram_write: AccessCost::new(20.0, 10.0),
                rom_read: AccessCost::new(4.0, 2.0),
                leakage_mw: 0.0,
                area_per_byte_um2: 1.2,
                rom_overhead_factor: 1.0,
                rom_periph_overhead: 0.047,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let costs = [
            ("ram_read", self.ram_read),
            ("ram_write", self.ram_write),
            ("rom_read", self.rom_read),
        ];
        for (name, c) in costs {
            if !(c.energy_pj >= 0.0 && c.latency_ns >= 0.0) || !c.energy_pj.is_finite() || !c.latency_ns.is_finite() {
                return Err(Error::Config(format!(
                    "{}: {name} energy/latency must be finite and >= 0",
                    self.tech
                )));
            }
        }
        let scalars = [
            ("leakage_mw", self.leakage_mw),
            ("area_per_byte_um2", self.area_per_byte_um2),
            ("rom_periph_overhead", self.rom_periph_overhead),
        ];
        for (name, v) in scalars {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{}: {name} must be finite and >= 0", self.tech)));
            }
        }
        if !(self.rom_overhead_factor >= 1.0) || !self.rom_overhead_factor.is_finite() {
            return Err(Error::Config(format!(
                "{}: rom_overhead_factor must be >= 1",
                self.tech
            )));
        }
        Ok(())
    }

    /// Access energy implied by `c`.
    pub fn access_energy(&self, c: &MemCounters) -> AccessEnergy {
        let ram_pj = c.ram_reads as f64 * self.ram_read.energy_pj
            + c.ram_writes as f64 * self.ram_write.energy_pj;
        let rom_pj = c.rom_reads as f64 * self.rom_read.energy_pj
            + c.rom_seq_ram_reads as f64 * self.ram_read.energy_pj
            + c.rom_seq_ram_writes as f64 * self.ram_write.energy_pj;
        AccessEnergy { ram_pj, rom_pj }
    }

    /// Serialized access time implied by `c`.
    pub fn busy_ns(&self, c: &MemCounters) -> f64 {
        (c.ram_reads + c.rom_seq_ram_reads) as f64 * self.ram_read.latency_ns
            + (c.ram_writes + c.rom_seq_ram_writes) as f64 * self.ram_write.latency_ns
            + c.rom_reads as f64 * self.rom_read.latency_ns
    }

    /// Energy of a single ROM read for this technology.
    pub fn rom_read_energy(&self) -> f64 {
        let one = MemCounters::for_rom_read(self.tech);
        self.access_energy(&one).rom_pj
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AccessEnergy {
    pub ram_pj: f64,
    pub rom_pj: f64,
}

/// Monotone access counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemCounters {
    pub ram_reads: u64,
    pub ram_writes: u64,
    pub rom_reads: u64,
    /// RAM reads issued inside R-SRAM ROM retrievals.
    pub rom_seq_ram_reads: u64,
    /// RAM writes issued inside R-SRAM ROM retrievals.
    pub rom_seq_ram_writes: u64,
    pub buffered_row_ops: u64,
}

impl MemCounters {
    /// Counter delta of one ROM read on `tech` (plain technologies read a dedicated ROM).
    pub fn for_rom_read(tech: Technology) -> Self {
        match tech {
            Technology::RSram => MemCounters {
                rom_reads: 1,
                rom_seq_ram_reads: 2,
                rom_seq_ram_writes: 3,
                buffered_row_ops: 1,
                ..Default::default()
            },
            _ => MemCounters {
                rom_reads: 1,
                ..Default::default()
            },
        }
    }
}

impl Add for MemCounters {
    type Output = MemCounters;

    fn add(self, o: MemCounters) -> MemCounters {
        MemCounters {
            ram_reads: self.ram_reads + o.ram_reads,
            ram_writes: self.ram_writes + o.ram_writes,
            rom_reads: self.rom_reads + o.rom_reads,
            rom_seq_ram_reads: self.rom_seq_ram_reads + o.rom_seq_ram_reads,
            rom_seq_ram_writes: self.rom_seq_ram_writes + o.rom_seq_ram_writes,
            buffered_row_ops: self.buffered_row_ops + o.buffered_row_ops,
        }
    }
}

impl AddAssign for MemCounters {
    fn add_assign(&mut self, o: MemCounters) {
        *self = *self + o;
    }
}

impl Sub for MemCounters {
    type Output = MemCounters;

    fn sub(self, o: MemCounters) -> MemCounters {
        MemCounters {
            ram_reads: self.ram_reads - o.ram_reads,
            ram_writes: self.ram_writes - o.ram_writes,
            rom_reads: self.rom_reads - o.rom_reads,
            rom_seq_ram_reads: self.rom_seq_ram_reads - o.rom_seq_ram_reads,
            rom_seq_ram_writes: self.rom_seq_ram_writes - o.rom_seq_ram_writes,
            buffered_row_ops: self.buffered_row_ops - o.buffered_row_ops,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RomPlacement {
    /// ROM data lives in the RAM cells.
    Embedded,
    /// A separate ROM array next to the RAM.
    Dedicated,
}

#[derive(Clone, Debug)]
struct RomPlane {
    words: Arc<[u32]>,
    directory: LutDirectory,
    placement: RomPlacement,
    rows: usize,
}

/// Sizes of one PE memory, in words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemGeometry {
    pub ram_words: usize,
    pub rom_words: usize,
    pub row_width: usize,
}

impl MemGeometry {
    pub fn ram_bytes(&self) -> usize {
        self.ram_words * WORD_BYTES
    }

    pub fn rom_bytes(&self) -> usize {
        self.rom_words * WORD_BYTES
    }
}

#[derive(Clone, Debug)]
pub struct MemArray {
    profile: TechnologyProfile,
    geometry: MemGeometry,
    ram: Vec<u32>,
    rom: Option<RomPlane>,
    row_buffer: Vec<u32>,
    fetch_buffer: Vec<u32>,
    counters: MemCounters,
}

impl MemArray {
    /// A bare RAM array without any ROM.
    pub fn new(profile: TechnologyProfile, ram_words: usize, row_width: usize) -> Result<Self> {
        if row_width == 0 || ram_words % row_width != 0 {
            return Err(Error::Config(format!(
                "RAM size {ram_words} words is not a multiple of the row width {row_width}"
            )));
        }
        profile.validate()?;
        Ok(MemArray {
            profile,
            geometry: MemGeometry {
                ram_words,
                rom_words: 0,
                row_width,
            },
            ram: vec![0; ram_words],
            rom: None,
            row_buffer: vec![0; row_width],
            fetch_buffer: vec![0; row_width],
            counters: MemCounters::default(),
        })
    }

    /// An array carrying `image` in its ROM plane (embedded technologies) or
    /// in a dedicated ROM array of `geometry.rom_words` words (plain ones).
    pub fn with_rom(profile: TechnologyProfile, geometry: MemGeometry, image: &RomImage) -> Result<Self> {
        let mut arr = MemArray::new(profile, geometry.ram_words, geometry.row_width)?;
        let placement = if arr.profile.tech.has_embedded_rom() {
            if geometry.rom_words > geometry.ram_words {
                return Err(Error::Capacity(format!(
                    "ROM plane of {} words cannot exceed the {}-word RAM plane",
                    geometry.rom_words, geometry.ram_words
                )));
            }
            RomPlacement::Embedded
        } else {
            RomPlacement::Dedicated
        };
        if image.len_words() > geometry.rom_words {
            return Err(Error::Capacity(format!(
                "LUT image of {} words does not fit {} ROM words",
                image.len_words(),
                geometry.rom_words
            )));
        }
        image.directory().validate(geometry.rom_words)?;
        arr.geometry.rom_words = geometry.rom_words;
        arr.rom = Some(RomPlane {
            words: image.shared_words(),
            directory: image.directory().clone(),
            placement,
            rows: geometry.rom_words.div_ceil(geometry.row_width),
        });
        Ok(arr)
    }

    pub fn profile(&self) -> &TechnologyProfile {
        &self.profile
    }

    pub fn tech(&self) -> Technology {
        self.profile.tech
    }

    pub fn geometry(&self) -> MemGeometry {
        self.geometry
    }

    pub fn capacity(&self) -> usize {
        self.ram.len()
    }

    pub fn counters(&self) -> MemCounters {
        self.counters
    }

    pub fn rom_placement(&self) -> Option<RomPlacement> {
        self.rom.as_ref().map(|r| r.placement)
    }

    pub fn lut_directory(&self) -> Option<&LutDirectory> {
        self.rom.as_ref().map(|r| &r.directory)
    }

    /// Energy of all accesses so far.
    pub fn access_energy(&self) -> AccessEnergy {
        self.profile.access_energy(&self.counters)
    }

    /// Serialized access time of all accesses so far.
    pub fn busy_ns(&self) -> f64 {
        self.profile.busy_ns(&self.counters)
    }

    /// Leakage power of the array, scaled from the RAM-plane figure by the
    /// extra area of the ROM (embedded overhead or dedicated array).
    pub fn leakage_power_mw(&self) -> f64 {
        let ram_bytes = self.geometry.ram_bytes();
        if ram_bytes == 0 {
            return 0.0;
        }
        let ram_only = self.profile.area_per_byte_um2 * ram_bytes as f64;
        let total = array_area(&self.profile, ram_bytes, self.geometry.rom_bytes()).unwrap_or(ram_only);
        if ram_only > 0.0 {
            self.profile.leakage_mw * total / ram_only
        } else {
            self.profile.leakage_mw
        }
    }

    #[inline]
    pub fn ram_read(&mut self, addr: usize) -> Result<u32> {
        let w = *self.ram.get(addr).ok_or(Error::Bounds {
            addr,
            len: self.geometry.ram_words,
        })?;
        self.counters.ram_reads += 1;
        Ok(w)
    }

    #[inline]
    pub fn ram_write(&mut self, addr: usize, word: u32) -> Result<()> {
        let len = self.geometry.ram_words;
        let slot = self.ram.get_mut(addr).ok_or(Error::Bounds { addr, len })?;
        *slot = word;
        self.counters.ram_writes += 1;
        Ok(())
    }

    /// Uncounted bulk load used when a PE is programmed before a run.
    pub fn preload(&mut self, base: usize, words: &[u32]) -> Result<()> {
        let end = base + words.len();
        if end > self.ram.len() {
            return Err(Error::Bounds {
                addr: end,
                len: self.ram.len(),
            });
        }
        self.ram[base..end].copy_from_slice(words);
        Ok(())
    }

    /// Uncounted view of RAM contents.
    pub fn ram_snapshot(&self) -> &[u32] {
        &self.ram
    }

    /// Reads one ROM row into `out`.
    pub fn rom_read_into(&mut self, rom_row: usize, out: &mut [u32]) -> Result<()> {
        let w = self.geometry.row_width;
        let rom = self
            .rom
            .as_ref()
            .ok_or(Error::UnsupportedMode(match self.profile.tech {
                Technology::Sram => "SRAM array",
                Technology::SttMram => "STT-MRAM array",
                Technology::RSram => "R-SRAM array without LUT image",
                Technology::RMram => "R-MRAM array without LUT image",
            }))?;
        if rom_row >= rom.rows {
            return Err(Error::Bounds {
                addr: rom_row,
                len: rom.rows,
            });
        }
        let start = rom_row * w;
        let rom_word = |i: usize| rom.words.get(start + i).copied().unwrap_or(0);
        match (rom.placement, self.profile.tech) {
            (RomPlacement::Embedded, Technology::RSram) => {
                let row = &mut self.ram[start..start + w];
                // save RAM row to the buffer
                self.row_buffer.copy_from_slice(row);
                self.counters.rom_seq_ram_reads += 1;
                self.counters.buffered_row_ops += 1;
                // WL1+WL2 on: write all ones
                row.fill(u32::MAX);
                self.counters.rom_seq_ram_writes += 1;
                // WL2 only: cells wired to WL2 (ROM '0') take the zero
                for (i, cell) in row.iter_mut().enumerate() {
                    *cell &= rom_word(i);
                }
                self.counters.rom_seq_ram_writes += 1;
                // conventional read now returns the ROM data
                out[..w].copy_from_slice(row);
                self.counters.rom_seq_ram_reads += 1;
                // restore
                row.copy_from_slice(&self.row_buffer);
                self.counters.rom_seq_ram_writes += 1;
            }
            _ => {
                for (i, o) in out[..w].iter_mut().enumerate() {
                    *o = rom_word(i);
                }
            }
        }
        self.counters.rom_reads += 1;
        Ok(())
    }

    pub fn rom_read(&mut self, rom_row: usize) -> Result<Vec<u32>> {
        let mut out = vec![0; self.geometry.row_width];
        self.rom_read_into(rom_row, &mut out)?;
        Ok(out)
    }
}

impl LutPort for MemArray {
    /// One ROM row read; the addressed word is selected from the row.
    fn fetch_lut(&mut self, kind: LutKind, offset: usize) -> Result<u32> {
        let addr = self
            .rom
            .as_ref()
            .ok_or(Error::UnsupportedMode("array without ROM"))?
            .directory
            .address(kind, offset)?;
        let w = self.geometry.row_width;
        let mut out = std::mem::take(&mut self.fetch_buffer);
        let r = self.rom_read_into(addr / w, &mut out).map(|_| out[addr % w]);
        self.fetch_buffer = out;
        r
    }
}

/// Leakage energy in pJ over `duration_ns` (mW × ns = pJ).
pub fn leakage_energy(arr: &MemArray, duration_ns: f64) -> Result<f64> {
    if !(duration_ns >= 0.0) {
        return Err(Error::Argument(format!(
            "leakage duration must be >= 0, got {duration_ns}"
        )));
    }
    Ok(arr.leakage_power_mw() * duration_ns)
}

/// Memory area in µm² for `ram_bytes` of RAM plus `rom_bytes` of ROM.
pub fn array_area(tech: &TechnologyProfile, ram_bytes: usize, rom_bytes: usize) -> Result<f64> {
    let per = tech.area_per_byte_um2;
    if rom_bytes == 0 {
        return Ok(per * ram_bytes as f64);
    }
    if tech.tech.has_embedded_rom() {
        if rom_bytes > ram_bytes {
            return Err(Error::Capacity(format!(
                "{rom_bytes} ROM bytes exceed the {ram_bytes}-byte RAM plane of {}",
                tech.tech
            )));
        }
        Ok(per * ram_bytes as f64 * tech.rom_overhead_factor * (1.0 + tech.rom_periph_overhead))
    } else {
        Ok(per * (ram_bytes + rom_bytes) as f64)
    }
}
