//! Fixed-point neuron traces measured against the double-precision oracles.

#![allow(dead_code)]

use super::oracle;
use romsnn::fixed::{Alu, Fixed, QFormat};
use romsnn::neuron::{Dynamics, HhState, IzhState, LifState, ModelKind, NeuronParams, NeuronState};

pub const Q: QFormat = QFormat::Q15_16;
pub const LIF_DRIVES: [f64; 7] = [0.052, 0.055, 0.06, 0.075, 0.1, 0.15, 0.3];
pub const HH_DT_MS: f64 = 0.01;

fn fx(x: f64) -> Fixed {
    Fixed::from_f64(x, Q).unwrap()
}

fn dynamics(p: NeuronParams) -> Dynamics {
    Dynamics::new(p, &ModelKind::ALL, Q, 6).unwrap()
}

fn lif_first_spike(d: &Dynamics, i: f64, max: usize) -> Option<usize> {
    let mut rom = d.luts().image().clone();
    let mut alu = Alu::new(Q);
    let mut reg = 0;
    let mut s = LifState { v: fx(d.params().lif.v_rest) };
    for n in 1..=max {
        let (next, spiked) = d.lif_step(s, fx(i), &mut reg, &mut rom, &mut alu).unwrap();
        if spiked {
            return Some(n);
        }
        s = next;
    }
    None
}

/// `(drive, fixed-point first spike, oracle first spike)`.
pub fn lif_first_spikes() -> Vec<(f64, Option<usize>, Option<usize>)> {
    let d = dynamics(NeuronParams::default());
    let p = d.params().lif.clone();
    LIF_DRIVES
        .iter()
        .map(|&i| {
            let want = oracle::lif_first_spike_exp_euler(p.tau_m_ms, p.dt_ms, p.r_m, p.v_rest, p.v_th, i, 2000);
            (i, lif_first_spike(&d, i, 2000), want)
        })
        .collect()
}

/// Fixed-point and forward-Euler first spike at drive 0.1.
pub fn lif_forward_euler_check() -> (Option<usize>, Option<usize>) {
    let d = dynamics(NeuronParams::default());
    let p = d.params().lif.clone();
    let fe = oracle::lif_first_spike_forward_euler(p.tau_m_ms, p.dt_ms, p.r_m, p.v_rest, p.v_th, 0.1, 200);
    (lif_first_spike(&d, 0.1, 200), fe)
}

fn izh_spikes(d: &Dynamics, i: f64, steps: usize) -> Vec<usize> {
    let mut rom = d.luts().image().clone();
    let mut alu = Alu::new(Q);
    let mut reg = 0;
    let mut s = match d.initial_state(ModelKind::Izhikevich) {
        NeuronState::Izh(s) => s,
        _ => unreachable!(),
    };
    let mut out = Vec::new();
    for n in 1..=steps {
        let (next, spiked): (IzhState, bool) = d.izh_step(s, fx(i), &mut reg, &mut rom, &mut alu).unwrap();
        if spiked {
            out.push(n);
        }
        s = next;
    }
    out
}

fn izh_oracle(p: &NeuronParams) -> oracle::Izh {
    let z = &p.izhikevich;
    oracle::Izh {
        a: z.a,
        b: z.b,
        c: z.c,
        d: z.d,
        v_th: z.v_th,
        dt: z.dt_ms,
        refractory: p.refractory_steps as u32,
    }
}

fn isi(s: &[usize]) -> Vec<usize> {
    s.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Inter-spike intervals (fixed point, oracle) under a constant drive of 10 with unit gain.
pub fn izh_isis() -> (Vec<usize>, Vec<usize>) {
    let mut p = NeuronParams::default();
    p.izhikevich.input_gain = 1.0;
    let d = dynamics(p.clone());
    let got = izh_spikes(&d, 10.0, 1000);
    let want = izh_oracle(&p).spike_steps(p.izhikevich.v_init, 10.0, 1000);
    (isi(&got), isi(&want))
}

/// Spike counts over 1000 steps without input (fixed point, oracle).
pub fn izh_silent_counts() -> (usize, usize) {
    let p = NeuronParams::default();
    let d = dynamics(p.clone());
    (
        izh_spikes(&d, 0.0, 1000).len(),
        izh_oracle(&p).spike_steps(p.izhikevich.v_init, 0.0, 1000).len(),
    )
}

fn hh_trace(d: &Dynamics, i: f64, steps: usize) -> (Vec<f64>, Vec<usize>) {
    let mut rom = d.luts().image().clone();
    let mut alu = Alu::new(Q);
    let mut reg = 0;
    let mut s: HhState = match d.initial_state(ModelKind::HodgkinHuxley) {
        NeuronState::Hh(s) => s,
        _ => unreachable!(),
    };
    let mut v = Vec::with_capacity(steps);
    let mut spikes = Vec::new();
    for k in 0..steps {
        let (next, out) = d.hh_step(s, fx(i), &mut reg, &mut rom, &mut alu).unwrap();
        if out.spiked {
            spikes.push(k);
        }
        v.push(next.v.to_f64());
        s = next;
    }
    (v, spikes)
}

/// Largest distance from -65 mV over 1000 unstimulated steps, and the spike count.
pub fn hh_rest_excursion() -> (f64, usize) {
    let d = dynamics(NeuronParams::default());
    let (v, spikes) = hh_trace(&d, 0.0, 1000);
    (v.iter().map(|x| (x + 65.0).abs()).fold(0.0, f64::max), spikes.len())
}

/// First spike time in ms under 10 µA/cm² (fixed point, oracle).
pub fn hh_first_spike_ms() -> (Option<f64>, Option<f64>) {
    let mut p = NeuronParams::default();
    p.hh.input_gain = 1.0;
    let d = dynamics(p);
    let (_, spikes) = hh_trace(&d, 10.0, 2000);
    let want = oracle::first_crossing(&oracle::Hh::standard().trace(-65.0, 10.0, 2000), -65.0, 0.0);
    (
        spikes.first().map(|&k| k as f64 * HH_DT_MS),
        want.map(|k| k as f64 * HH_DT_MS),
    )
}
