//! Runs a small network and compares the pipelined makespan with a serial schedule.

use romsnn::config::ExperimentConfig;
use romsnn::report::run_experiment;

fn main() -> romsnn::Result<()> {
    for images in [1, 2, 4, 8] {
        let mut cfg = ExperimentConfig::with_network("16x16x1-8c5-2s-32o-10o");
        cfg.images = images;
        cfg.timesteps = 10;
        cfg.pe.ram_bytes = 4096;
        let s = run_experiment(&cfg)?.stats;
        println!(
            "{images} images on {} PEs: pipelined {:>10.0} ns, serial {:>10.0} ns, overlap gain {:.2}x",
            s.pes,
            s.makespan_ns,
            s.serial_makespan_ns,
            s.serial_makespan_ns / s.makespan_ns
        );
    }
    Ok(())
}
