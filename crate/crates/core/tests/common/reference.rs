//! Flat single-process SNN evaluator.
//!
//! Layers are evaluated straight from their description: every output
//! neuron sums the weights of its active inputs, then takes one dynamics
//! step. No window-split broadcast, no PE packing, no output merge, no
//! memory model; the ROM image serves as an uncounted LUT port.

#![allow(dead_code)]

use romsnn::fixed::{Alu, Fixed, QFormat};
use romsnn::lut::RomImage;
use romsnn::mapper::{init_weights, normalize_layer, LayerKind, LayerSpec, LayerWeights, NetworkSpec};
use romsnn::neuron::{Dynamics, NeuronState};
use romsnn::spikes::{Shape3, SpikeTensor};

struct Layer {
    spec: LayerSpec,
    out: Shape3,
    weights: LayerWeights,
    states: Vec<NeuronState>,
    regs: Vec<u16>,
}

pub struct Reference<'d> {
    dynamics: &'d Dynamics,
    rom: RomImage,
    alu: Alu,
    layers: Vec<Layer>,
}

fn out_shape(l: &LayerSpec) -> Shape3 {
    let s = l.in_shape;
    match l.kind {
        LayerKind::Conv => Shape3::new(s.h - l.kernel + 1, s.w - l.kernel + 1, l.outputs),
        LayerKind::Pool => Shape3::new(s.h / l.kernel, s.w / l.kernel, s.c),
        LayerKind::Fc => Shape3::new(1, 1, l.outputs),
    }
}

impl<'d> Reference<'d> {
    pub fn new(spec: &NetworkSpec, seed: u64, fmt: QFormat, dynamics: &'d Dynamics) -> Self {
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let weights = init_weights(&normalize_layer(l, i).unwrap(), seed, fmt).unwrap();
                let out = out_shape(l);
                Layer {
                    spec: l.clone(),
                    out,
                    weights,
                    states: vec![dynamics.initial_state(l.model); out.len()],
                    regs: vec![0; out.len()],
                }
            })
            .collect();
        Reference {
            dynamics,
            rom: dynamics.luts().image().clone(),
            alu: Alu::new(fmt),
            layers,
        }
    }

    pub fn begin_image(&mut self) {
        for l in &mut self.layers {
            let init = self.dynamics.initial_state(l.spec.model);
            l.states.iter_mut().for_each(|s| *s = init);
            l.regs.iter_mut().for_each(|r| *r = 0);
        }
    }

    /// One time-step through every layer; returns each layer's output spikes.
    pub fn step(&mut self, input: &SpikeTensor) -> Vec<SpikeTensor> {
        let mut outs = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for l in &mut self.layers {
            let s = l.spec.in_shape;
            assert_eq!(x.shape(), s);
            let mut y = SpikeTensor::zeros(l.out);
            let zero = Fixed::zero(self.alu.format());
            for oy in 0..l.out.h {
                for ox in 0..l.out.w {
                    for o in 0..l.out.c {
                        let mut acc = zero;
                        match l.spec.kind {
                            LayerKind::Conv => {
                                let k = l.spec.kernel;
                                for di in 0..k {
                                    for dj in 0..k {
                                        for c in 0..s.c {
                                            if x.get(oy + di, ox + dj, c) {
                                                acc = self.alu.add(acc, l.weights.get(o, (di * k + dj) * s.c + c));
                                            }
                                        }
                                    }
                                }
                            }
                            LayerKind::Pool => {
                                let k = l.spec.kernel;
                                for di in 0..k {
                                    for dj in 0..k {
                                        if x.get(oy * k + di, ox * k + dj, o) {
                                            acc = self.alu.add(acc, l.weights.get(o, di * k + dj));
                                        }
                                    }
                                }
                            }
                            LayerKind::Fc => {
                                for p in 0..s.len() {
                                    if x.bits().get(p) {
                                        acc = self.alu.add(acc, l.weights.get(o, p));
                                    }
                                }
                            }
                        }
                        let j = l.out.index(oy, ox, o);
                        let (next, out) = self
                            .dynamics
                            .step(l.states[j], acc, &mut l.regs[j], &mut self.rom, &mut self.alu)
                            .unwrap();
                        l.states[j] = next;
                        if out.spiked {
                            y.bits_mut().set(j, true);
                        }
                    }
                }
            }
            outs.push(y.clone());
            x = y;
        }
        outs
    }
}
