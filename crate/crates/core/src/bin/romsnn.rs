use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use romsnn::config::load_config;
use romsnn::memory::Technology;
use romsnn::report::{area_report, perf_report, run_experiment, sweep, write_outputs};
use romsnn::Error;

#[derive(Parser)]
#[command(name = "romsnn", version, about = "Energy, area and performance of SNN accelerators built on ROM-embedded RAM")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output directory for report.txt and stats.csv.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write stats.json (or print JSON for area/perf).
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the configured experiment.
    Run { config: PathBuf },
    /// Per-PE area and iso-storage ratios.
    Area { config: PathBuf },
    /// Iso-area PE count and throughput projection.
    Perf { config: PathBuf },
    /// Run every (tech, fp) combination.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.4,1.0")]
        fp: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "sram,rsram,stt,rmram")]
        tech: Vec<Technology>,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Error> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Input(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.cmd {
        Cmd::Run { config } => {
            let report = run_experiment(&load_config(config)?)?;
            write_outputs(&cli.out, std::slice::from_ref(&report), cli.json)?;
            let s = &report.stats;
            println!(
                "{} {} fp={}: {:.3} pJ (RAM {:.3}, ROM {:.3}, Rest {:.3}), makespan {:.1} ns -> {}",
                s.tech,
                s.phase,
                s.fp,
                s.total_pj,
                s.ram_pj,
                s.rom_pj,
                s.rest_pj,
                s.makespan_ns,
                cli.out.display()
            );
        }
        Cmd::Area { config } => {
            let r = area_report(&load_config(config)?)?;
            if cli.json {
                print_json(&r)?;
            } else {
                print!("{}", r.to_text());
            }
        }
        Cmd::Perf { config } => {
            let r = perf_report(&load_config(config)?)?;
            if cli.json {
                print_json(&r)?;
            } else {
                print!("{}", r.to_text());
            }
        }
        Cmd::Sweep { config, fp, tech } => {
            let cfg = load_config(config)?;
            for &f in fp {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::Range { value: f, min: 0.0, max: 1.0 });
                }
            }
            let reports = sweep(&cfg, fp, tech)?;
            write_outputs(&cli.out, &reports, cli.json)?;
            for r in &reports {
                let s = &r.stats;
                println!("{:<6} fp={:<4} total {:>16.3} pJ", s.tech.name(), s.fp, s.total_pj);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("romsnn: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
