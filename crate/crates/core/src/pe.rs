//! Processing element: event controller, spike buffers, and local memory.
//!
//! Per time-step the controller drains the input buffer bit by bit. A zero
//! bit costs nothing; a one bit reads the weights of its fan-out and adds
//! them to the current accumulators. After the drain every mapped neuron is
//! updated once, spikes go to the output buffer, and in the training phase
//! each firing neuron runs STDP over its recently active inputs.
//!
//! RAM layout for a PE holding `O` local maps of a layer with `P` weights
//! per map:
//!
//! ```text
//! [0, P·O)                 weights, address p·O + o (one bit's fan-out is contiguous)
//! [P·O, P·O + N·S)         neuron state, neuron j = w·O + o, S words each
//! ```
//!
//! Nothing but spike bits leaves a PE.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Alu, Fixed};
use crate::mapper::{ConvLayer, LayerWeights};
use crate::memory::{MemArray, MemCounters, MemGeometry, TechnologyProfile};
use crate::neuron::{synapse_accumulate, Dynamics};
use crate::spikes::SpikeBits;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Training,
    #[default]
    Inference,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Training => "training",
            Phase::Inference => "inference",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FsmState {
    Idle,
    Buffering,
    Synapse,
    Neuron,
    Plasticity,
    Flush,
}

#[derive(Clone, Debug)]
pub struct PeConfig {
    pub pe_id: usize,
    pub layer_tag: usize,
    pub layer: Arc<ConvLayer>,
    pub maps: Range<usize>,
    pub phase: Phase,
}

/// Memory counters split by the controller block that issued them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BlockCounters {
    pub synapse: MemCounters,
    pub neuron: MemCounters,
    pub plasticity: MemCounters,
    /// Per-image state initialization.
    pub housekeeping: MemCounters,
}

impl BlockCounters {
    pub fn total(&self) -> MemCounters {
        self.synapse + self.neuron + self.plasticity + self.housekeeping
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PeStats {
    pub blocks: BlockCounters,
    pub core_ops: u64,
    pub timesteps: u64,
    pub neuron_updates: u64,
    pub input_bits: u64,
    pub input_ones: u64,
    pub output_spikes: u64,
    pub plasticity_invocations: u64,
    pub plastic_updates: u64,
    pub clamp_events: u64,
    pub saturation_events: u64,
}

/// Cost of one `step_timestep`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepReport {
    pub mem: MemCounters,
    pub core_ops: u64,
    pub spikes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeOutput {
    pub pe_id: usize,
    pub layer_tag: usize,
    pub maps: Range<usize>,
    pub bits: SpikeBits,
}

const NO_SPIKE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct PeInstance {
    config: PeConfig,
    mem: MemArray,
    alu: Alu,
    dynamics: Arc<Dynamics>,
    in_buf: SpikeBits,
    in_capacity: usize,
    out_buf: SpikeBits,
    acc: Vec<Fixed>,
    regs: Vec<u16>,
    pre_times: Vec<u32>,
    window_steps: u32,
    state_base: usize,
    t: u32,
    fsm: FsmState,
    stats: PeStats,
}

impl PeInstance {
    /// Builds a PE and programs its weights (programming is not counted).
    pub fn new(
        config: PeConfig,
        profile: TechnologyProfile,
        geometry: MemGeometry,
        dynamics: Arc<Dynamics>,
        weights: &LayerWeights,
    ) -> Result<Self> {
        let layer = Arc::clone(&config.layer);
        if config.maps.is_empty() || config.maps.end > layer.out_maps {
            return Err(Error::Mapping {
                layer: layer.index,
                msg: format!("PE {} has an invalid map range {:?}", config.pe_id, config.maps),
            });
        }
        let local = config.maps.len();
        let per_map = layer.weights_per_map();
        let neurons = layer.windows() * local;
        let state_base = per_map * local;
        let footprint = state_base + neurons * layer.model.state_words();
        if footprint > geometry.ram_words {
            return Err(Error::Capacity(format!(
                "PE {} needs {footprint} RAM words, has {}",
                config.pe_id, geometry.ram_words
            )));
        }
        let mut mem = MemArray::with_rom(profile, geometry, dynamics.luts().image())?;
        let mut image = vec![0u32; state_base];
        for (o_local, o) in config.maps.clone().enumerate() {
            for p in 0..per_map {
                image[p * local + o_local] = weights.get(o, p).to_word();
            }
        }
        mem.preload(0, &image)?;
        let training = config.phase == Phase::Training;
        let mut pe = PeInstance {
            alu: Alu::new(dynamics.format()),
            in_buf: SpikeBits::default(),
            in_capacity: layer.scatter_bits(),
            out_buf: SpikeBits::zeros(neurons),
            acc: vec![Fixed::zero(dynamics.format()); neurons],
            regs: vec![0; neurons],
            pre_times: if training { vec![NO_SPIKE; layer.in_shape.len()] } else { Vec::new() },
            window_steps: dynamics.params().stdp.window_steps(),
            state_base,
            t: 0,
            fsm: FsmState::Idle,
            stats: PeStats::default(),
            config,
            mem,
            dynamics,
        };
        let init = pe.dynamics.initial_state(layer.model).to_words();
        let sw = layer.model.state_words();
        let states: Vec<u32> = (0..neurons).flat_map(|_| init[..sw].iter().copied()).collect();
        pe.mem.preload(state_base, &states)?;
        Ok(pe)
    }

    pub fn config(&self) -> &PeConfig {
        &self.config
    }

    pub fn fsm(&self) -> FsmState {
        self.fsm
    }

    pub fn stats(&self) -> &PeStats {
        &self.stats
    }

    pub fn profile(&self) -> &TechnologyProfile {
        self.mem.profile()
    }

    pub fn geometry(&self) -> MemGeometry {
        self.mem.geometry()
    }

    pub fn counters(&self) -> MemCounters {
        self.mem.counters()
    }

    pub fn leakage_power_mw(&self) -> f64 {
        self.mem.leakage_power_mw()
    }

    pub fn neurons(&self) -> usize {
        self.out_buf.len()
    }

    /// Time-steps completed in the current image.
    pub fn timestep(&self) -> u32 {
        self.t
    }

    /// Smallest and largest stored weight, for auditing bounds.
    pub fn weight_range(&self) -> (f64, f64) {
        let fmt = self.dynamics.format();
        self.mem.ram_snapshot()[..self.state_base]
            .iter()
            .map(|&w| Fixed::from_word(w, fmt).to_f64())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    /// Resets neuron state for a new image (counted as housekeeping writes)
    /// and clears registers and buffers.
    pub fn begin_image(&mut self) -> Result<()> {
        if self.fsm != FsmState::Idle {
            return Err(Error::Schedule(format!(
                "PE {} cannot start an image in state {:?}",
                self.config.pe_id, self.fsm
            )));
        }
        let before = self.mem.counters();
        let model = self.config.layer.model;
        let sw = model.state_words();
        let init = self.dynamics.initial_state(model).to_words();
        for j in 0..self.neurons() {
            for (k, &w) in init[..sw].iter().enumerate() {
                self.mem.ram_write(self.state_base + j * sw + k, w)?;
            }
        }
        self.stats.blocks.housekeeping += self.mem.counters() - before;
        self.regs.iter_mut().for_each(|r| *r = 0);
        self.pre_times.iter_mut().for_each(|t| *t = NO_SPIKE);
        self.in_buf.clear();
        self.out_buf.fill_zero();
        self.t = 0;
        Ok(())
    }

    /// Buffers a broadcast if it carries this PE's layer tag. Returns whether it was accepted.
    pub fn on_broadcast(&mut self, layer_tag: usize, spikes: &SpikeBits) -> Result<bool> {
        if !matches!(self.fsm, FsmState::Idle | FsmState::Buffering) {
            return Err(Error::Schedule(format!(
                "PE {} received a broadcast in state {:?}",
                self.config.pe_id, self.fsm
            )));
        }
        if layer_tag != self.config.layer_tag {
            return Ok(false);
        }
        if self.in_buf.len() + spikes.len() > self.in_capacity {
            return Err(Error::Capacity(format!(
                "PE {} input buffer holds {} bits, broadcast would need {}",
                self.config.pe_id,
                self.in_capacity,
                self.in_buf.len() + spikes.len()
            )));
        }
        self.in_buf.extend_from(spikes);
        self.fsm = FsmState::Buffering;
        Ok(true)
    }

    /// Runs one time-step over the buffered input and returns its cost.
    pub fn step_timestep(&mut self) -> Result<StepReport> {
        let mem0 = self.mem.counters();
        let ops0 = self.alu.ops();
        let layer = Arc::clone(&self.config.layer);
        let local = self.config.maps.len();
        let k_bits = layer.window_bits();
        let in_c = layer.in_shape.c;
        let zero = Fixed::zero(self.dynamics.format());
        let training = self.config.phase == Phase::Training;

        self.fsm = FsmState::Synapse;
        self.out_buf.fill_zero();
        self.acc.iter_mut().for_each(|a| *a = zero);
        let before = self.mem.counters();
        let in_buf = std::mem::take(&mut self.in_buf);
        for i in in_buf.iter_ones() {
            let (w, k) = (i / k_bits, i % k_bits);
            if training {
                self.pre_times[layer.input_index(w, k)] = self.t;
            }
            let acc = &mut self.acc[w * local..(w + 1) * local];
            if layer.depthwise {
                let c = k % in_c;
                if self.config.maps.contains(&c) {
                    let o = c - self.config.maps.start;
                    synapse_accumulate(&mut self.mem, (k / in_c) * local + o, 1, &mut acc[o..], &mut self.alu)?;
                }
            } else {
                synapse_accumulate(&mut self.mem, k * local, local, acc, &mut self.alu)?;
            }
        }
        self.stats.input_bits += in_buf.len() as u64;
        self.stats.input_ones += in_buf.count_ones();
        self.in_buf = in_buf;
        self.in_buf.clear();
        self.stats.blocks.synapse += self.mem.counters() - before;

        self.fsm = FsmState::Neuron;
        let before = self.mem.counters();
        let model = layer.model;
        let sw = model.state_words();
        let mut fired = Vec::new();
        for j in 0..self.neurons() {
            let out = self.dynamics.update(
                model,
                &mut self.mem,
                self.state_base + j * sw,
                self.acc[j],
                &mut self.regs[j],
                &mut self.alu,
            )?;
            self.stats.clamp_events += out.clamp_events as u64;
            if out.spiked {
                self.out_buf.set(j, true);
                fired.push(j);
            }
        }
        self.stats.neuron_updates += self.neurons() as u64;
        self.stats.output_spikes += fired.len() as u64;
        self.stats.blocks.neuron += self.mem.counters() - before;

        if training && !fired.is_empty() {
            self.fsm = FsmState::Plasticity;
            let before = self.mem.counters();
            let mut synapses = Vec::new();
            for &j in &fired {
                let (w, o) = (j / local, j % local);
                synapses.clear();
                for k in 0..k_bits {
                    let p = if layer.depthwise {
                        if k % in_c != self.config.maps.start + o {
                            continue;
                        }
                        k / in_c
                    } else {
                        k
                    };
                    let tp = self.pre_times[layer.input_index(w, k)];
                    if tp != NO_SPIKE && self.t - tp <= self.window_steps {
                        synapses.push((p * local + o, tp));
                    }
                }
                self.stats.plasticity_invocations += 1;
                self.stats.plastic_updates +=
                    self.dynamics
                        .apply_plasticity(&mut self.mem, synapses.iter().copied(), self.t, &mut self.alu)?;
            }
            self.stats.blocks.plasticity += self.mem.counters() - before;
        }

        self.t += 1;
        self.stats.timesteps += 1;
        self.stats.core_ops = self.alu.ops();
        self.stats.saturation_events = self.alu.saturation_events();
        self.fsm = FsmState::Idle;
        Ok(StepReport {
            mem: self.mem.counters() - mem0,
            core_ops: self.alu.ops() - ops0,
            spikes: fired.len() as u64,
        })
    }

    /// Hands out and clears the output spikes.
    pub fn flush_outputs(&mut self) -> PeOutput {
        self.fsm = FsmState::Flush;
        let bits = self.out_buf.clone();
        self.out_buf.fill_zero();
        self.fsm = FsmState::Idle;
        PeOutput {
            pe_id: self.config.pe_id,
            layer_tag: self.config.layer_tag,
            maps: self.config.maps.clone(),
            bits,
        }
    }
}
