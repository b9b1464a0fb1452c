//! Double-precision reference integrators for the neuron models.

#![allow(dead_code)]

/// Step at which a LIF neuron driven by constant `i` first fires, using the
/// exponential-Euler map `v' = v_rest + κ(v − v_rest) + (1 − κ)·r_m·i`.
pub fn lif_first_spike_exp_euler(tau: f64, dt: f64, r_m: f64, v_rest: f64, v_th: f64, i: f64, max: usize) -> Option<usize> {
    let k = (-dt / tau).exp();
    let mut v = v_rest;
    for n in 1..=max {
        v = v_rest + k * (v - v_rest) + (1.0 - k) * r_m * i;
        if v >= v_th {
            return Some(n);
        }
    }
    None
}

/// Same question for the forward-Euler map `v' = v + dt/τ(−(v − v_rest) + r_m·i)`.
pub fn lif_first_spike_forward_euler(tau: f64, dt: f64, r_m: f64, v_rest: f64, v_th: f64, i: f64, max: usize) -> Option<usize> {
    let mut v = v_rest;
    for n in 1..=max {
        v += dt / tau * (-(v - v_rest) + r_m * i);
        if v >= v_th {
            return Some(n);
        }
    }
    None
}

pub struct Izh {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub v_th: f64,
    pub dt: f64,
    pub refractory: u32,
}

impl Izh {
    /// Spike steps of a neuron starting at `(v0, b·v0)` under constant input.
    pub fn spike_steps(&self, v0: f64, i: f64, steps: usize) -> Vec<usize> {
        let (mut v, mut u) = (v0, self.b * v0);
        let mut refr = 0;
        let mut out = Vec::new();
        for n in 1..=steps {
            let inp = if refr > 0 {
                refr -= 1;
                0.0
            } else {
                i
            };
            let nv = v + self.dt * (0.04 * v * v + 5.0 * v + 140.0 - u + inp);
            let nu = u + self.dt * self.a * (self.b * v - u);
            v = nv;
            u = nu;
            if v >= self.v_th {
                v = self.c;
                u += self.d;
                refr = self.refractory;
                out.push(n);
            }
        }
        out
    }
}

pub struct Hh {
    pub c_m: f64,
    pub g_na: f64,
    pub g_k: f64,
    pub g_l: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub dt: f64,
}

fn vtrap(x: f64, y: f64) -> f64 {
    if x.abs() < 1e-9 {
        y
    } else {
        x / (1.0 - (-x / y).exp())
    }
}

pub fn rates(v: f64) -> [f64; 6] {
    [
        0.1 * vtrap(v + 40.0, 10.0),
        4.0 * (-(v + 65.0) / 18.0).exp(),
        0.01 * vtrap(v + 55.0, 10.0),
        0.125 * (-(v + 65.0) / 80.0).exp(),
        0.07 * (-(v + 65.0) / 20.0).exp(),
        1.0 / (1.0 + (-(v + 35.0) / 10.0).exp()),
    ]
}

impl Hh {
    pub fn standard() -> Self {
        Hh {
            c_m: 1.0,
            g_na: 120.0,
            g_k: 36.0,
            g_l: 0.3,
            e_na: 50.0,
            e_k: -77.0,
            e_l: -54.387,
            dt: 0.01,
        }
    }

    /// Voltage trace under constant current, starting from gate steady state at `v0`.
    pub fn trace(&self, v0: f64, i: f64, steps: usize) -> Vec<f64> {
        let r = rates(v0);
        let mut v = v0;
        let mut m = r[0] / (r[0] + r[1]);
        let mut n = r[2] / (r[2] + r[3]);
        let mut h = r[4] / (r[4] + r[5]);
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let [am, bm, an, bn, ah, bh] = rates(v);
            let i_ion = self.g_na * m.powi(3) * h * (v - self.e_na)
                + self.g_k * n.powi(4) * (v - self.e_k)
                + self.g_l * (v - self.e_l);
            let nv = v + self.dt * (i - i_ion) / self.c_m;
            m += self.dt * (am * (1.0 - m) - bm * m);
            n += self.dt * (an * (1.0 - n) - bn * n);
            h += self.dt * (ah * (1.0 - h) - bh * h);
            v = nv;
            out.push(v);
        }
        out
    }
}

/// Index of the first upward crossing of `th` in a trace.
pub fn first_crossing(trace: &[f64], v0: f64, th: f64) -> Option<usize> {
    let mut prev = v0;
    for (k, &v) in trace.iter().enumerate() {
        if prev < th && v >= th {
            return Some(k);
        }
        prev = v;
    }
    None
}
