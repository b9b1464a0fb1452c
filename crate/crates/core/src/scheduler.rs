//! Global memory, scatter/gather over a shared broadcast bus, and pipelined timing.
//!
//! Execution has two parts. The functional pass walks images, time-steps and
//! layers in order, moving spikes through [`GlobalMemory`] and letting every
//! PE of a layer evaluate its time-step (in parallel if configured). Each
//! evaluation reports its memory accesses and core operations, which become
//! compute latencies. The timing pass then replays those latencies through
//! a discrete-event model of the pipeline:
//!
//! * stage `(l, n)` is layer `l` processing all time-steps of image `n`;
//! * it may start once `(l-1, n)` and `(l, n-1)` have finished;
//! * inside a stage each time-step is scatter, compute, gather;
//! * scatters and gathers share one bus, granted first come first served.
//!
//! Spike outputs come only from the functional pass, so they cannot depend
//! on the overlap schedule.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapper::{merge_outputs, ConvLayer, MappedNetwork};
use crate::memory::{MemGeometry, TechnologyProfile};
use crate::neuron::Dynamics;
use crate::pe::{PeConfig, PeInstance, Phase, StepReport};
use crate::spikes::{Shape3, SpikeBits, SpikeTensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub bus_width_bits: usize,
    pub cycle_ns: f64,
    /// Cycles charged per arithmetic operation of a PE core.
    pub core_op_cycles: f64,
    pub parallel: bool,
    /// Evaluate the PEs of a layer last-to-first.
    pub reverse_pe_order: bool,
    /// Worker threads for parallel evaluation; 0 uses the global pool.
    pub threads: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            bus_width_bits: 32,
            cycle_ns: 1.0,
            core_op_cycles: 1.0,
            parallel: true,
            reverse_pe_order: false,
            threads: 0,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bus_width_bits == 0 {
            return Err(Error::Config("bus.width_bits must be positive".into()));
        }
        if !(self.cycle_ns.is_finite() && self.cycle_ns > 0.0) {
            return Err(Error::Config("bus.cycle_ns must be positive".into()));
        }
        if !(self.core_op_cycles.is_finite() && self.core_op_cycles >= 0.0) {
            return Err(Error::Config("pe.core_op_cycles must be non-negative".into()));
        }
        Ok(())
    }

    /// Bus occupancy of a `bits`-bit transfer.
    pub fn transfer_ns(&self, bits: usize) -> f64 {
        bits.div_ceil(self.bus_width_bits) as f64 * self.cycle_ns
    }

    fn compute_ns(&self, profile: &TechnologyProfile, r: &StepReport) -> f64 {
        profile.busy_ns(&r.mem) + r.core_ops as f64 * self.core_op_cycles * self.cycle_ns
    }
}

/// Produces the input spikes of one image at one time-step.
pub trait SpikeSource {
    fn shape(&self) -> Shape3;
    fn spikes(&self, image: usize, t: usize) -> Result<SpikeTensor>;
}

/// Spike tensors at every layer boundary. Slot 0 holds network inputs and
/// slot `l + 1` the output of layer `l`.
#[derive(Clone, Debug, Default)]
pub struct GlobalMemory {
    slots: BTreeMap<(usize, usize, usize), SpikeTensor>,
    words_read: u64,
    words_written: u64,
}

impl GlobalMemory {
    pub fn write(&mut self, slot: usize, image: usize, t: usize, tensor: SpikeTensor) {
        self.words_written += tensor.bits().words().len() as u64;
        self.slots.insert((slot, image, t), tensor);
    }

    pub fn read(&mut self, slot: usize, image: usize, t: usize) -> Result<&SpikeTensor> {
        let tensor = self.slots.get(&(slot, image, t)).ok_or_else(|| {
            Error::Schedule(format!("slot {slot} of image {image} at step {t} has not been written"))
        })?;
        self.words_read += tensor.bits().words().len() as u64;
        Ok(tensor)
    }

    /// Uncounted inspection.
    pub fn get(&self, slot: usize, image: usize, t: usize) -> Option<&SpikeTensor> {
        self.slots.get(&(slot, image, t))
    }

    pub fn words_read(&self) -> u64 {
        self.words_read
    }

    pub fn words_written(&self) -> u64 {
        self.words_written
    }

    pub fn clear(&mut self) {
        *self = GlobalMemory::default();
    }
}

/// Durations of one layer: bus transfers per time-step and compute per (image, step).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LayerTiming {
    pub scatter_ns: f64,
    pub gather_ns: f64,
    /// Indexed `image · timesteps + t`.
    pub compute_ns: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub makespan_ns: f64,
    /// Sum of all durations, i.e. no overlap at all.
    pub serial_makespan_ns: f64,
    pub bus_busy_ns: f64,
}

#[derive(Clone, Copy, Debug)]
struct Ready {
    time: f64,
    layer: usize,
    image: usize,
}

impl PartialEq for Ready {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Ready {}

impl PartialOrd for Ready {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Ready {
    // reversed so that BinaryHeap pops the earliest, then lowest layer, then lowest image
    fn cmp(&self, o: &Self) -> Ordering {
        o.time
            .total_cmp(&self.time)
            .then(o.layer.cmp(&self.layer))
            .then(o.image.cmp(&self.image))
    }
}

/// Discrete-event makespan of the image-level layer pipeline.
pub fn pipelined_timing(layers: &[LayerTiming], images: usize, timesteps: usize) -> Result<Timing> {
    let steps = images * timesteps;
    if let Some((l, _)) = layers.iter().enumerate().find(|(_, lt)| lt.compute_ns.len() != steps) {
        return Err(Error::Schedule(format!(
            "layer {l} has {} compute durations, expected {steps}",
            layers[l].compute_ns.len()
        )));
    }
    let serial: f64 = layers
        .iter()
        .map(|lt| steps as f64 * (lt.scatter_ns + lt.gather_ns) + lt.compute_ns.iter().sum::<f64>())
        .sum();
    if layers.is_empty() || steps == 0 {
        return Ok(Timing::default());
    }
    let n_layers = layers.len();
    let mut done = vec![vec![None::<f64>; images]; n_layers];
    let mut op = vec![vec![0usize; images]; n_layers];
    let mut heap = BinaryHeap::new();
    heap.push(Ready { time: 0.0, layer: 0, image: 0 });
    let mut bus_free = 0.0f64;
    let mut bus_busy = 0.0;
    let mut makespan = 0.0f64;
    let ops_per_stage = 3 * timesteps;
    while let Some(Ready { time, layer, image }) = heap.pop() {
        let lt = &layers[layer];
        let i = op[layer][image];
        let (t, kind) = (i / 3, i % 3);
        let end = match kind {
            1 => time + lt.compute_ns[image * timesteps + t],
            _ => {
                let d = if kind == 0 { lt.scatter_ns } else { lt.gather_ns };
                let start = time.max(bus_free);
                bus_free = start + d;
                bus_busy += d;
                bus_free
            }
        };
        op[layer][image] = i + 1;
        if i + 1 < ops_per_stage {
            heap.push(Ready { time: end, layer, image });
            continue;
        }
        done[layer][image] = Some(end);
        makespan = makespan.max(end);
        let mut wake = |l: usize, n: usize, done: &Vec<Vec<Option<f64>>>| {
            let up = if l > 0 { done[l - 1][n] } else { Some(0.0) };
            let prev = if n > 0 { done[l][n - 1] } else { Some(0.0) };
            if let (Some(a), Some(b)) = (up, prev) {
                heap.push(Ready { time: a.max(b), layer: l, image: n });
            }
        };
        if layer + 1 < n_layers {
            wake(layer + 1, image, &done);
        }
        if image + 1 < images {
            wake(layer, image + 1, &done);
        }
    }
    Ok(Timing {
        makespan_ns: makespan,
        serial_makespan_ns: serial,
        bus_busy_ns: bus_busy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunOutcome {
    pub images: usize,
    pub timesteps: usize,
    pub timing: Timing,
    pub gm_words_read: u64,
    pub gm_words_written: u64,
    pub bus_bits: u64,
}

impl RunOutcome {
    pub fn gm_words(&self) -> u64 {
        self.gm_words_read + self.gm_words_written
    }
}

/// The PE array with its global memory and control unit.
pub struct Accelerator {
    layers: Vec<Arc<ConvLayer>>,
    pes: Vec<Vec<PeInstance>>,
    profile: TechnologyProfile,
    gm: GlobalMemory,
    cfg: SchedulerConfig,
    pool: Option<rayon::ThreadPool>,
    input_shape: Shape3,
    scattered: Vec<Option<(usize, usize)>>,
    computed: Vec<Option<(usize, usize)>>,
    last_compute_ns: Vec<f64>,
    bus_bits: u64,
}

impl Accelerator {
    /// Instantiates one PE per assignment, all with the same memory geometry.
    pub fn new(
        net: &MappedNetwork,
        dynamics: Arc<Dynamics>,
        profile: TechnologyProfile,
        geometry: MemGeometry,
        phase: Phase,
        cfg: SchedulerConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let layers: Vec<Arc<ConvLayer>> = net.layers.iter().cloned().map(Arc::new).collect();
        let mut pes = Vec::with_capacity(layers.len());
        for (layer, assignment) in layers.iter().zip(&net.assignments) {
            let group = assignment
                .pes
                .iter()
                .map(|a| {
                    let pc = PeConfig {
                        pe_id: a.pe_id,
                        layer_tag: layer.index,
                        layer: Arc::clone(layer),
                        maps: a.maps.clone(),
                        phase,
                    };
                    PeInstance::new(pc, profile.clone(), geometry, Arc::clone(&dynamics), &net.weights[layer.index])
                })
                .collect::<Result<Vec<_>>>()?;
            pes.push(group);
        }
        let pool = if cfg.threads > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.threads)
                    .build()
                    .map_err(|e| Error::Config(format!("cannot build a {}-thread pool: {e}", cfg.threads)))?,
            )
        } else {
            None
        };
        let n = layers.len();
        Ok(Accelerator {
            layers,
            pes,
            profile,
            gm: GlobalMemory::default(),
            cfg,
            pool,
            input_shape: net.spec.input,
            scattered: vec![None; n],
            computed: vec![None; n],
            last_compute_ns: vec![0.0; n],
            bus_bits: 0,
        })
    }

    pub fn layers(&self) -> &[Arc<ConvLayer>] {
        &self.layers
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn profile(&self) -> &TechnologyProfile {
        &self.profile
    }

    /// PEs in id order.
    pub fn pes(&self) -> impl Iterator<Item = &PeInstance> {
        self.pes.iter().flatten()
    }

    pub fn global_memory(&self) -> &GlobalMemory {
        &self.gm
    }

    /// Output spikes of `layer` for `(image, t)`, if produced.
    pub fn layer_output(&self, layer: usize, image: usize, t: usize) -> Option<&SpikeTensor> {
        self.gm.get(layer + 1, image, t)
    }

    /// Resets neuron state of every PE; returns per-layer housekeeping latency.
    pub fn begin_image(&mut self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.pes.len());
        for group in &mut self.pes {
            let mut worst = 0.0f64;
            for pe in group.iter_mut() {
                let before = pe.stats().blocks.housekeeping;
                pe.begin_image()?;
                let delta = pe.stats().blocks.housekeeping - before;
                worst = worst.max(self.profile.busy_ns(&delta));
            }
            out.push(worst);
        }
        Ok(out)
    }

    pub fn load_input(&mut self, image: usize, t: usize, tensor: SpikeTensor) -> Result<()> {
        if tensor.shape() != self.input_shape {
            return Err(Error::Shape(format!(
                "input tensor is {}, network expects {}",
                tensor.shape(),
                self.input_shape
            )));
        }
        self.gm.write(0, image, t, tensor);
        Ok(())
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.layers.len() {
            return Err(Error::Schedule(format!("no layer {layer}")));
        }
        if self.pes[layer].is_empty() {
            return Err(Error::Schedule(format!("layer {layer} has no mapped PEs")));
        }
        Ok(())
    }

    /// Window-split broadcast of the layer input for `(image, t)`. Returns the bits sent.
    pub fn scatter(&mut self, layer: usize, image: usize, t: usize) -> Result<usize> {
        self.check_layer(layer)?;
        let l = Arc::clone(&self.layers[layer]);
        let input = self.gm.read(layer, image, t)?;
        let k_bits = l.window_bits();
        let mut bits = SpikeBits::zeros(l.scatter_bits());
        for w in 0..l.windows() {
            for k in 0..k_bits {
                if input.bits().get(l.input_index(w, k)) {
                    bits.set(w * k_bits + k, true);
                }
            }
        }
        for pe in self.pes.iter_mut().flatten() {
            pe.on_broadcast(layer, &bits)?;
        }
        self.bus_bits += bits.len() as u64;
        self.scattered[layer] = Some((image, t));
        Ok(bits.len())
    }

    /// Every PE of the layer runs its time-step. Returns the layer's compute latency.
    pub fn compute(&mut self, layer: usize, image: usize, t: usize) -> Result<f64> {
        self.check_layer(layer)?;
        if self.scattered[layer] != Some((image, t)) {
            return Err(Error::Schedule(format!(
                "layer {layer} computing image {image} step {t} before its scatter"
            )));
        }
        let group = &mut self.pes[layer];
        let reports: Vec<Result<StepReport>> = if self.cfg.parallel {
            let reverse = self.cfg.reverse_pe_order;
            let mut eval = || -> Vec<Result<StepReport>> {
                if reverse {
                    group.par_iter_mut().rev().map(|pe| pe.step_timestep()).collect()
                } else {
                    group.par_iter_mut().map(|pe| pe.step_timestep()).collect()
                }
            };
            match &self.pool {
                Some(pool) => pool.install(eval),
                None => eval(),
            }
        } else if self.cfg.reverse_pe_order {
            group.iter_mut().rev().map(|pe| pe.step_timestep()).collect()
        } else {
            group.iter_mut().map(|pe| pe.step_timestep()).collect()
        };
        let mut worst = 0.0f64;
        for r in reports {
            worst = worst.max(self.cfg.compute_ns(&self.profile, &r?));
        }
        self.scattered[layer] = None;
        self.computed[layer] = Some((image, t));
        self.last_compute_ns[layer] = worst;
        Ok(worst)
    }

    /// Collects the layer's output spikes into global memory. Returns the bits sent.
    pub fn gather(&mut self, layer: usize, image: usize, t: usize) -> Result<usize> {
        self.check_layer(layer)?;
        if self.computed[layer] != Some((image, t)) {
            return Err(Error::Schedule(format!(
                "gather of layer {layer} image {image} step {t} before its compute"
            )));
        }
        let outputs: Vec<_> = self.pes[layer].iter_mut().map(|pe| pe.flush_outputs()).collect();
        let partials: Vec<_> = outputs.iter().map(|o| (o.maps.clone(), &o.bits)).collect();
        let tensor = merge_outputs(&self.layers[layer], &partials).map_err(|e| match e {
            Error::Incomplete(m) => Error::Schedule(m),
            other => other,
        })?;
        let bits = tensor.bits().len();
        self.gm.write(layer + 1, image, t, tensor);
        self.bus_bits += bits as u64;
        self.computed[layer] = None;
        Ok(bits)
    }

    /// Runs `images × timesteps` through the network and times the pipeline.
    pub fn run(&mut self, source: &dyn SpikeSource, images: usize, timesteps: usize) -> Result<RunOutcome> {
        if source.shape() != self.input_shape {
            return Err(Error::Shape(format!(
                "spike source produces {}, network expects {}",
                source.shape(),
                self.input_shape
            )));
        }
        for l in 0..self.layers.len() {
            self.check_layer(l)?;
        }
        self.gm.clear();
        self.bus_bits = 0;
        let mut timing: Vec<LayerTiming> = self
            .layers
            .iter()
            .map(|l| LayerTiming {
                scatter_ns: self.cfg.transfer_ns(l.scatter_bits()),
                gather_ns: self.cfg.transfer_ns(l.neurons()),
                compute_ns: Vec::with_capacity(images * timesteps),
            })
            .collect();
        for n in 0..images {
            let housekeeping = self.begin_image()?;
            for t in 0..timesteps {
                self.load_input(n, t, source.spikes(n, t)?)?;
                for l in 0..self.layers.len() {
                    self.scatter(l, n, t)?;
                    let mut c = self.compute(l, n, t)?;
                    if t == 0 {
                        c += housekeeping[l];
                    }
                    timing[l].compute_ns.push(c);
                    self.gather(l, n, t)?;
                }
            }
        }
        Ok(RunOutcome {
            images,
            timesteps,
            timing: pipelined_timing(&timing, images, timesteps)?,
            gm_words_read: self.gm.words_read(),
            gm_words_written: self.gm.words_written(),
            bus_bits: self.bus_bits,
        })
    }
}
