//! A single PE: synapse work tracks the number of incoming spikes, while
//! neuron work is fixed per time-step.

use std::sync::Arc;

use romsnn::fixed::QFormat;
use romsnn::mapper::{init_weights, normalize_layer, parse_network};
use romsnn::memory::{MemGeometry, Technology, TechnologyProfile};
use romsnn::neuron::{Dynamics, ModelKind, NeuronParams};
use romsnn::pe::{PeConfig, PeInstance, Phase};
use romsnn::spikes::SpikeBits;

fn main() -> romsnn::Result<()> {
    let q = QFormat::Q15_16;
    let spec = parse_network("8x8x1-16o", &[ModelKind::Lif])?;
    let layer = Arc::new(normalize_layer(&spec.layers[0], 0)?);
    let weights = init_weights(&layer, 3, q)?;
    let dynamics = Arc::new(Dynamics::new(NeuronParams::default(), &[ModelKind::Lif], q, 6)?);
    let geometry = MemGeometry { ram_words: 2048, rom_words: 2048, row_width: 16 };
    let config = PeConfig { pe_id: 0, layer_tag: 0, layer: Arc::clone(&layer), maps: 0..16, phase: Phase::Inference };
    let mut pe = PeInstance::new(config, TechnologyProfile::default_for(Technology::RSram), geometry, dynamics, &weights)?;
    pe.begin_image()?;
    println!("{} neurons, {} input bits per time-step", pe.neurons(), layer.window_bits());
    for every in [0, 16, 8, 4, 2, 1] {
        let bits: Vec<bool> = (0..64).map(|i| every > 0 && i % every == 0).collect();
        pe.on_broadcast(0, &SpikeBits::from_bools(&bits))?;
        let before = pe.stats().blocks;
        let report = pe.step_timestep()?;
        let out = pe.flush_outputs();
        let after = pe.stats().blocks;
        println!(
            "{:>2} input spikes: synapse reads {:>5}, neuron ROM reads {:>3}, R-SRAM micro-ops {:>4}, core ops {:>5}, {} output spikes",
            bits.iter().filter(|b| **b).count(),
            after.synapse.ram_reads - before.synapse.ram_reads,
            after.neuron.rom_reads - before.neuron.rom_reads,
            report.mem.rom_seq_ram_reads + report.mem.rom_seq_ram_writes,
            report.core_ops,
            out.bits.count_ones()
        );
    }
    Ok(())
}
