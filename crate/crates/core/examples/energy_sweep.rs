//! Energy of one network on all four technologies at two input scales.

use romsnn::config::ExperimentConfig;
use romsnn::memory::Technology;
use romsnn::pe::Phase;
use romsnn::report::{csv_string, sweep};

fn main() -> romsnn::Result<()> {
    let mut cfg = ExperimentConfig::with_network("28x28x1-100o");
    cfg.phase = Phase::Training;
    cfg.images = 5;
    cfg.timesteps = 35;
    cfg.pe.ram_bytes = 8192;
    let reports = sweep(&cfg, &[0.4, 1.0], &Technology::ALL)?;
    println!("{:<6} {:>4} {:>14} {:>14} {:>14} {:>14}", "tech", "fp", "RAM pJ", "ROM pJ", "rest pJ", "total pJ");
    for r in &reports {
        let s = &r.stats;
        println!(
            "{:<6} {:>4} {:>14.1} {:>14.1} {:>14.1} {:>14.1}",
            s.tech.name(),
            s.fp,
            s.ram_pj,
            s.rom_pj,
            s.rest_pj,
            s.total_pj
        );
    }
    if std::env::args().any(|a| a == "--csv") {
        print!("{}", csv_string(&reports)?);
    }
    Ok(())
}
