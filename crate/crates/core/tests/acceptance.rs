//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::path::Path;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use romsnn::config::{load_config, ExperimentConfig};
use romsnn::encoder::{synthetic, RateCodedSource, RateCoder};
use romsnn::fixed::{Fixed, QFormat};
use romsnn::lut::{build_exp_lut, eval_exp, range_reduce, RomImage};
use romsnn::memory::{MemArray, MemGeometry, Technology, TechnologyProfile};
use romsnn::neuron::ModelKind;
use romsnn::pe::{BlockCounters, Phase};
use romsnn::report::{area_report, csv_string, perf_report, run_experiment, Experiment};
use romsnn::scheduler::SpikeSource;
use romsnn::spikes::{Shape3, SpikeTensor};
use romsnn::Result;

use common::{fidelity, reference::Reference};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn cfg(network: &str) -> ExperimentConfig {
    ExperimentConfig::with_network(network)
}

/// Per-layer block counters summed over the layer's PEs.
fn layer_blocks(ex: &Experiment) -> Vec<BlockCounters> {
    let mut out = vec![BlockCounters::default(); ex.mapped.layers.len()];
    for pe in ex.accelerator.pes() {
        let b = &mut out[pe.config().layer_tag];
        let s = pe.stats().blocks;
        b.synapse += s.synapse;
        b.neuron += s.neuron;
        b.plasticity += s.plasticity;
        b.housekeeping += s.housekeeping;
    }
    out
}

/// Runs `cfg` on synthetic rate-coded images and returns the experiment after the run.
fn run_traced(cfg: &ExperimentConfig) -> Result<Experiment> {
    let mut ex = Experiment::build(cfg)?;
    let data = synthetic(ex.mapped.spec.input, cfg.images, cfg.seed);
    let src = RateCodedSource { dataset: &data, coder: RateCoder::new(cfg.fp, cfg.seed)? };
    ex.accelerator.run(&src, cfg.images, cfg.timesteps)?;
    Ok(ex)
}

/// Layer input tensor of `(image, t)` as stored in global memory.
fn layer_input(ex: &Experiment, layer: usize, image: usize, t: usize) -> SpikeTensor {
    ex.accelerator.global_memory().get(layer, image, t).expect("tensor in global memory").clone()
}

/// Synapse RAM reads implied by a layer input: every active input inside a
/// receptive window reads one weight per output map it feeds.
fn expected_synapse_reads(ex: &Experiment, layer: usize, x: &SpikeTensor) -> u64 {
    let l = &ex.mapped.layers[layer];
    let s = l.in_shape;
    let mut reads = 0u64;
    for oy in 0..l.out_shape.h {
        for ox in 0..l.out_shape.w {
            for di in 0..l.kh {
                for dj in 0..l.kw {
                    for c in 0..s.c {
                        if x.get(oy * l.stride + di, ox * l.stride + dj, c) {
                            reads += if l.depthwise { 1 } else { l.out_maps as u64 };
                        }
                    }
                }
            }
        }
    }
    reads
}

fn trace_replay() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let sizes: Vec<usize> = (0..4).map(|_| rng.random_range(8..48)).collect();
    let network = format!("10x10x1-{}o-{}o-{}o-{}o-10o", sizes[0], sizes[1], sizes[2], sizes[3]);
    let models: Vec<ModelKind> = (0..5).map(|_| ModelKind::ALL[rng.random_range(0..3)]).collect();
    let mut c = cfg(&network);
    c.models = models.clone();
    c.images = 20;
    c.timesteps = 35;
    c.fp = 0.6;
    c.neuron.izhikevich.input_gain = 10.0;
    c.neuron.hh.input_gain = 10.0;
    let ex = run_traced(&c)?;
    let blocks = layer_blocks(&ex);
    let mut bad = Vec::new();
    let mut total_ones = 0;
    for (li, l) in ex.mapped.layers.iter().enumerate() {
        let updates = (l.neurons() * c.images * c.timesteps) as u64;
        let k = l.model.contract().times(updates);
        let n = blocks[li].neuron;
        if (n.rom_reads, n.ram_reads, n.ram_writes) != (k.rom_reads, k.ram_reads, k.ram_writes) {
            bad.push(format!("layer {li} neuron block {n:?} vs contract {k:?}"));
        }
        let mut ones = 0;
        let mut want = 0;
        for image in 0..c.images {
            for t in 0..c.timesteps {
                let x = layer_input(&ex, li, image, t);
                ones += x.count_ones();
                want += expected_synapse_reads(&ex, li, &x);
            }
        }
        total_ones += ones;
        if ones * l.out_maps as u64 != want || blocks[li].synapse.ram_reads != want {
            bad.push(format!("layer {li} synapse reads {} vs {want}", blocks[li].synapse.ram_reads));
        }
    }
    let detail = format!("{network} models {:?}, {} active layer inputs replayed", models, total_ones);
    outcome(bad.is_empty(), if bad.is_empty() { detail } else { bad.join("; ") })
}

struct Zeros(Shape3);

impl SpikeSource for Zeros {
    fn shape(&self) -> Shape3 {
        self.0
    }
    fn spikes(&self, _: usize, _: usize) -> Result<SpikeTensor> {
        Ok(SpikeTensor::zeros(self.0))
    }
}

fn sparsity() -> Result<Outcome> {
    let mut c = cfg("12x12x2-6c3-2s-8o");
    c.images = 3;
    c.timesteps = 12;
    c.fp = 0.5;
    let ex = run_traced(&c)?;
    let blocks = layer_blocks(&ex);
    let mut lines = Vec::new();
    let mut ok = true;
    for (li, l) in ex.mapped.layers.iter().enumerate() {
        let want: u64 = (0..c.images)
            .flat_map(|i| (0..c.timesteps).map(move |t| (i, t)))
            .map(|(i, t)| expected_synapse_reads(&ex, li, &layer_input(&ex, li, i, t)))
            .sum();
        let got = blocks[li].synapse.ram_reads;
        ok &= got == want;
        lines.push(format!("L{li}{} {got}/{want}", if l.depthwise { " depthwise" } else { "" }));
    }
    let mut ex0 = Experiment::build(&c)?;
    let shape = ex0.mapped.spec.input;
    ex0.accelerator.run(&Zeros(shape), c.images, c.timesteps)?;
    let zero_reads: u64 = layer_blocks(&ex0).iter().map(|b| b.synapse.ram_reads).sum();
    ok &= zero_reads == 0;
    outcome(ok, format!("{}; all-zero input reads {zero_reads}", lines.join(", ")))
}

fn exp_accuracy() -> Result<Outcome> {
    let q = QFormat::Q15_16;
    let k = 6;
    let lut = build_exp_lut(k, q)?;
    let mut rom = RomImage::build([&lut])?;
    let n = 100_000;
    let lsb = q.lsb();
    let mut worst_rel = 0.0f64;
    let mut worst_dec = 0.0f64;
    for i in 0..n {
        let t = Fixed::from_f64(-8.0 + 16.0 * i as f64 / (n - 1) as f64, q)?;
        let tq = t.to_f64();
        let e = eval_exp(t, &lut, &mut rom)?;
        worst_rel = worst_rel.max((e.to_f64() - tq.exp()).abs() / tq.exp());
        let rr = range_reduce(t, k);
        if rr.big_m * (1 << k) + rr.index_d as i64 != rr.n_steps {
            return outcome(false, format!("n_steps split broken at t={tq}"));
        }
        let rebuilt = rr.n_steps as f64 * std::f64::consts::LN_2 / (1u64 << k) as f64 + rr.remainder_r.to_f64();
        worst_dec = worst_dec.max((rebuilt - tq).abs() / lsb);
    }
    outcome(
        worst_rel <= 1e-4 && worst_dec <= 1.0,
        format!("K=6 Q15.16, {n} points: max rel err {worst_rel:.3e} (<= 1e-4), decomposition err {worst_dec:.3} LSB (<= 1)"),
    )
}

fn rom_sequences() -> Result<Outcome> {
    let q = QFormat::Q15_16;
    let lut = build_exp_lut(6, q)?;
    let image = RomImage::build([&lut])?;
    let geom = MemGeometry { ram_words: 256, rom_words: 256, row_width: 16 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fill: Vec<u32> = (0..geom.ram_words).map(|_| rng.random()).collect();
    let mut detail = Vec::new();
    let mut ok = true;
    let rows = image.len_words().div_ceil(geom.row_width);
    let reads = 500u64;
    let mut reference_rows = Vec::new();
    for tech in [Technology::RSram, Technology::RMram] {
        let mut arr = MemArray::with_rom(TechnologyProfile::default_for(tech), geom, &image)?;
        arr.preload(0, &fill)?;
        let mut data = Vec::new();
        for i in 0..reads {
            data.push(arr.rom_read(i as usize % rows)?);
        }
        let c = arr.counters();
        let same_ram = arr.ram_snapshot() == fill.as_slice();
        let rom_ok = data.iter().enumerate().all(|(i, row)| {
            let start = (i % rows) * geom.row_width;
            row.iter().enumerate().all(|(j, w)| *w == image.words().get(start + j).copied().unwrap_or(0))
        });
        ok &= same_ram && rom_ok && c.rom_reads == reads && c.ram_reads == 0 && c.ram_writes == 0;
        match tech {
            Technology::RSram => {
                ok &= c.rom_seq_ram_reads == 2 * reads && c.rom_seq_ram_writes == 3 * reads;
                detail.push(format!(
                    "rsram {} reads / {} writes per ROM read",
                    c.rom_seq_ram_reads as f64 / reads as f64,
                    c.rom_seq_ram_writes as f64 / reads as f64
                ));
            }
            _ => {
                ok &= c.rom_seq_ram_reads == 0 && c.rom_seq_ram_writes == 0;
                detail.push(format!("rmram {} micro-ops", c.rom_seq_ram_reads + c.rom_seq_ram_writes));
            }
        }
        detail.push(format!("RAM unchanged {same_ram}, ROM data exact {rom_ok}"));
        reference_rows.push(data);
    }
    ok &= reference_rows[0] == reference_rows[1];
    outcome(ok, detail.join(", "))
}

fn area_ratios() -> Result<Outcome> {
    let r = area_report(&cfg("28x28x1-10o"))?;
    let (a, b) = (r.sram_over_rsram, r.stt_over_rmram);
    outcome(
        (1.85..=1.96).contains(&a) && (1.85..=2.00).contains(&b),
        format!("{} B RAM, 1:1 ROM: SRAM/R-SRAM {a:.4} in [1.85, 1.96], STT/R-MRAM {b:.4} in [1.85, 2.00]", r.ram_bytes),
    )
}

fn iso_area_perf() -> Result<Outcome> {
    let mut c = cfg("32x32x3-24c5-2s-80c5-2s-10o");
    c.perf.unlimited_parallelism = true;
    let free = perf_report(&c)?;
    c.perf.unlimited_parallelism = false;
    let capped = perf_report(&c)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &free.pairs {
        let dev = (p.speedup / p.area_ratio - 1.0).abs();
        ok &= dev <= 0.01;
        parts.push(format!("{} unlimited speedup {:.4} vs ratio {:.4}", p.embedded.name(), p.speedup, p.area_ratio));
    }
    for p in &capped.pairs {
        ok &= p.speedup <= p.area_ratio * (1.0 + 1e-12);
        parts.push(format!("{} capped {:.4}", p.embedded.name(), p.speedup));
    }
    outcome(ok, parts.join(", "))
}

fn csv_row(text: &str) -> HashMap<String, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    headers.iter().map(str::to_owned).zip(row.iter().map(str::to_owned)).collect()
}

/// Total energy from CSV counters and the configured constants alone.
fn recompute_total(cfg: &ExperimentConfig, row: &HashMap<String, String>) -> f64 {
    let g = |k: &str| row[k].parse::<f64>().unwrap();
    let p = cfg.profile(cfg.tech).unwrap();
    let ram = cfg.pe.ram_bytes as f64;
    let rom = cfg.pe.rom_bytes() as f64;
    let ram_area = p.area_per_byte_um2 * ram;
    let mem_area = if p.tech.has_embedded_rom() {
        ram_area * p.rom_overhead_factor * (1.0 + p.rom_periph_overhead)
    } else {
        p.area_per_byte_um2 * (ram + rom)
    };
    let leak_mw = p.leakage_mw * mem_area / ram_area + cfg.pe.core_leakage_mw;
    let dynamic = g("ram_reads") * p.ram_read.energy_pj
        + g("ram_writes") * p.ram_write.energy_pj
        + g("rom_reads") * p.rom_read.energy_pj
        + g("rom_seq_ram_reads") * p.ram_read.energy_pj
        + g("rom_seq_ram_writes") * p.ram_write.energy_pj
        + g("core_ops") * cfg.pe.core_op_energy_pj
        + g("pe_steps") * cfg.pe.control_energy_pj
        + g("gm_words") * cfg.bus.gm_word_energy_pj;
    dynamic + g("pes") * leak_mw * g("makespan_ns")
}

fn mnist_energy() -> Result<Outcome> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/mnist1.toml");
    let mut base = load_config(&path)?;
    base.baseline = None;
    base.images = 100;
    base.timesteps = 35;
    let variants = [(Phase::Training, 0.4), (Phase::Training, 1.0), (Phase::Inference, 0.4)];
    let mut totals = Vec::new();
    let mut worst = 0.0f64;
    for (phase, fp) in variants {
        let mut c = base.clone();
        c.phase = phase;
        c.fp = fp;
        let r = run_experiment(&c)?;
        let row = csv_row(&csv_string(std::slice::from_ref(&r))?);
        let csv_total: f64 = row["total_pj"].parse().unwrap();
        let again = recompute_total(&c, &row);
        worst = worst.max((again - csv_total).abs() / csv_total);
        totals.push(csv_total);
    }
    let (train04, train1, infer04) = (totals[0], totals[1], totals[2]);
    outcome(
        train1 > train04 && train04 > infer04 && worst <= 1e-9,
        format!(
            "training fp=1 {train1:.4e} > fp=0.4 {train04:.4e}; inference fp=0.4 {infer04:.4e}; recomputed total rel err {worst:.2e}"
        ),
    )
}

fn reference_match() -> Result<Outcome> {
    let mut c = cfg("32x32x1-4c5-2s-10o");
    c.images = 3;
    c.timesteps = 10;
    c.fp = 0.8;
    let ex = run_traced(&c)?;
    let mut r = Reference::new(&ex.mapped.spec, c.seed, c.format()?, &ex.dynamics);
    let mut compared = 0;
    let mut spikes = 0;
    for image in 0..c.images {
        r.begin_image();
        for t in 0..c.timesteps {
            let outs = r.step(&layer_input(&ex, 0, image, t));
            for (li, want) in outs.iter().enumerate() {
                let got = ex.accelerator.layer_output(li, image, t).expect("layer output");
                if got != want {
                    return outcome(false, format!("image {image} t {t} layer {li} differs"));
                }
                compared += 1;
                spikes += want.count_ones();
            }
        }
    }
    outcome(true, format!("{compared} layer outputs bit-identical to the flat evaluator ({spikes} spikes)"))
}

fn neuron_fidelity() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    let lif = fidelity::lif_first_spikes();
    let lif_worst = lif
        .iter()
        .map(|(_, g, w)| match (g, w) {
            (Some(g), Some(w)) => g.abs_diff(*w),
            _ => usize::MAX,
        })
        .max()
        .unwrap_or(0);
    ok &= lif_worst <= 1;
    parts.push(format!("LIF first spike within {lif_worst} step"));
    let (fe_got, fe_want) = fidelity::lif_forward_euler_check();
    let fe_ok = matches!((fe_got, fe_want), (Some(a), Some(b)) if a.abs_diff(b) <= 1);
    ok &= fe_ok;
    parts.push(format!("forward Euler {fe_got:?}/{fe_want:?}"));
    let (gi, wi) = fidelity::izh_isis();
    let isi_worst = gi.iter().zip(&wi).take(10).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(usize::MAX);
    ok &= gi.len() >= 4 && wi.len() >= 4 && isi_worst <= 2;
    parts.push(format!("Izhikevich ISI within {isi_worst} steps"));
    let silent = fidelity::izh_silent_counts();
    ok &= silent == (0, 0);
    let (excursion, rest_spikes) = fidelity::hh_rest_excursion();
    ok &= excursion <= 2.0 && rest_spikes == 0;
    parts.push(format!("HH rest excursion {excursion:.3} mV"));
    let (hh_got, hh_want) = fidelity::hh_first_spike_ms();
    let hh_ok = matches!((hh_got, hh_want), (Some(a), Some(b)) if (a - b).abs() <= 0.5);
    ok &= hh_ok;
    parts.push(format!("HH first spike {hh_got:?} vs {hh_want:?} ms"));
    outcome(ok, parts.join(", "))
}

fn determinism() -> Result<Outcome> {
    let mut c = cfg("16x16x1-4c5-2s-24o-10o");
    c.phase = Phase::Training;
    c.images = 4;
    c.timesteps = 12;
    c.pe.ram_bytes = 2048;
    let csv_for = |c: &ExperimentConfig| -> Result<String> { csv_string(&[run_experiment(c)?]) };
    let reference = csv_for(&c)?;
    let mut variants = Vec::new();
    variants.push(("repeat", c.clone()));
    let mut s = c.clone();
    s.execution.parallel = false;
    variants.push(("serial", s));
    let mut rev = c.clone();
    rev.execution.reverse_pe_order = true;
    variants.push(("reversed", rev));
    for n in [1, 3] {
        let mut t = c.clone();
        t.execution.threads = n;
        variants.push((if n == 1 { "threads=1" } else { "threads=3" }, t));
    }
    let mut differing = Vec::new();
    for (name, v) in &variants {
        if csv_for(v)? != reference {
            differing.push(*name);
        }
    }
    let pes = Experiment::build(&c)?.mapped.pe_count();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} runs on {pes} PEs byte-identical", variants.len() + 1)
        } else {
            format!("differs: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("access counts follow the per-model contract on a traced run", trace_replay),
        ("synapse reads scale with input spikes only", sparsity),
        ("range-reduced exp accuracy", exp_accuracy),
        ("ROM read sequences preserve RAM contents", rom_sequences),
        ("iso-storage area ratios", area_ratios),
        ("iso-area speedup tracks area ratio", iso_area_perf),
        ("energy trends and recomputed totals", mnist_energy),
        ("mapped network matches flat evaluator", reference_match),
        ("neuron model fidelity", neuron_fidelity),
        ("bit-identical reports across execution orders", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
