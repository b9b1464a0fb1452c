//! Iso-storage PE area and the iso-area throughput projection.

use romsnn::config::ExperimentConfig;
use romsnn::report::{area_report, perf_report};

fn main() -> romsnn::Result<()> {
    let mut cfg = ExperimentConfig::with_network("32x32x3-24c5-2s-80c5-2s-10o");
    print!("{}", area_report(&cfg)?.to_text());
    print!("{}", perf_report(&cfg)?.to_text());
    cfg.perf.unlimited_parallelism = true;
    println!("with unlimited parallelism per layer:");
    for p in perf_report(&cfg)?.pairs {
        println!("  {} over {}: speedup {:.4}, area ratio {:.4}", p.embedded.name(), p.base.name(), p.speedup, p.area_ratio);
    }
    Ok(())
}
