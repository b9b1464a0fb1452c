//! Drives one neuron of each model with a constant current and prints its spike train.

use romsnn::fixed::{Alu, Fixed, QFormat};
use romsnn::neuron::{Dynamics, ModelKind, NeuronParams};

fn main() -> romsnn::Result<()> {
    let q = QFormat::Q15_16;
    let dynamics = Dynamics::new(NeuronParams::default(), &ModelKind::ALL, q, 6)?;
    let mut rom = dynamics.luts().image().clone();
    println!("ROM image: {} words", rom.len_words());
    for (model, drive, steps) in [
        (ModelKind::Lif, 0.1, 100),
        (ModelKind::Izhikevich, 1.0, 200),
        (ModelKind::HodgkinHuxley, 1.0, 500),
    ] {
        let mut alu = Alu::new(q);
        let mut reg = 0;
        let mut state = dynamics.initial_state(model);
        let mut spikes = Vec::new();
        for t in 0..steps {
            let (next, out) = dynamics.step(state, Fixed::from_f64(drive, q)?, &mut reg, &mut rom, &mut alu)?;
            if out.spiked {
                spikes.push(t);
            }
            state = next;
        }
        let c = model.contract();
        println!(
            "{:<11} drive {drive}: {} spikes in {steps} steps, first at {:?}; per update {} ROM / {} RAM reads / {} RAM writes, {} ALU ops total",
            model.name(),
            spikes.len(),
            spikes.first(),
            c.rom_reads,
            c.ram_reads,
            c.ram_writes,
            alu.ops()
        );
    }
    Ok(())
}
