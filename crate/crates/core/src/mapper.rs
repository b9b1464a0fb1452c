//! Network description, lowering of pool/fc layers to convolutions, window
//! splitting, PE packing, and output merging.
//!
//! Network text uses the compact layer notation
//!
//! ```text
//! 32x32x3-24c5-2s-80c5-2s-10o
//! ```
//!
//! The first token is the input (`HxWxC`, `HxW`, or a plain neuron count
//! `N`). Each following token is a layer: `<maps>c<k>` (k×k convolution,
//! stride 1), `<k>s` (k×k pooling, stride k), or `<N>o` (fully connected).
//! Tokens are separated by `-` or whitespace; `#` starts a comment.
//!
//! After [`normalize_layer`] every layer is a convolution: pooling becomes a
//! depthwise convolution with averaging weights and a fully connected layer a
//! convolution whose kernel covers the whole input. Tensors are HWC and a
//! window's bits are ordered `(di, dj, c)`, channel fastest.

use std::fmt;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::{Fixed, QFormat};
use crate::neuron::ModelKind;
use crate::spikes::{Shape3, SpikeBits, SpikeTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Pool,
    Fc,
}

/// A layer as written in the network description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_shape: Shape3,
    /// Conv/pool kernel side; ignored for fc.
    pub kernel: usize,
    /// Output maps (conv) or neurons (fc); ignored for pool.
    pub outputs: usize,
    pub model: ModelKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input: Shape3,
    pub layers: Vec<LayerSpec>,
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input)?;
        for l in &self.layers {
            match l.kind {
                LayerKind::Conv => write!(f, "-{}c{}", l.outputs, l.kernel)?,
                LayerKind::Pool => write!(f, "-{}s", l.kernel)?,
                LayerKind::Fc => write!(f, "-{}o", l.outputs)?,
            }
        }
        Ok(())
    }
}

fn number(tok: &str, what: &str) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Config(format!("bad {what} `{tok}` in network description"))),
    }
}

fn parse_input(tok: &str) -> Result<Shape3> {
    let dims = tok
        .split('x')
        .map(|d| number(d, "input dimension"))
        .collect::<Result<Vec<_>>>()?;
    match dims[..] {
        [n] => Ok(Shape3::new(1, 1, n)),
        [h, w] => Ok(Shape3::new(h, w, 1)),
        [h, w, c] => Ok(Shape3::new(h, w, c)),
        _ => Err(Error::Config(format!("bad input shape `{tok}`"))),
    }
}

/// Parses the layer notation. `models` holds either one model for every
/// layer or one per layer.
pub fn parse_network(text: &str, models: &[ModelKind]) -> Result<NetworkSpec> {
    let tokens: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == '-' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .collect();
    let (first, rest) = tokens
        .split_first()
        .ok_or_else(|| Error::Config("empty network description".into()))?;
    let input = parse_input(first)?;
    if rest.is_empty() {
        return Err(Error::Config("network has no layers".into()));
    }
    if models.len() != 1 && models.len() != rest.len() {
        return Err(Error::Config(format!(
            "{} neuron models given for {} layers",
            models.len(),
            rest.len()
        )));
    }
    let mut layers = Vec::with_capacity(rest.len());
    let mut shape = input;
    for (i, tok) in rest.iter().enumerate() {
        let model = models[if models.len() == 1 { 0 } else { i }];
        let lower = tok.to_ascii_lowercase();
        let spec = if let Some(n) = lower.strip_suffix('o') {
            LayerSpec {
                kind: LayerKind::Fc,
                in_shape: shape,
                kernel: 0,
                outputs: number(n, "fc size")?,
                model,
            }
        } else if let Some(k) = lower.strip_suffix('s') {
            LayerSpec {
                kind: LayerKind::Pool,
                in_shape: shape,
                kernel: number(k, "pool size")?,
                outputs: shape.c,
                model,
            }
        } else if let Some((m, k)) = lower.split_once('c') {
            LayerSpec {
                kind: LayerKind::Conv,
                in_shape: shape,
                kernel: number(k, "kernel size")?,
                outputs: number(m, "map count")?,
                model,
            }
        } else {
            return Err(Error::Config(format!("unrecognized layer `{tok}`")));
        };
        shape = normalize_layer(&spec, i)?.out_shape;
        layers.push(spec);
    }
    Ok(NetworkSpec { input, layers })
}

/// A layer lowered to convolution form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvLayer {
    pub index: usize,
    pub source: LayerKind,
    pub in_shape: Shape3,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub out_maps: usize,
    /// Map `o` sees only input channel `o` (pooling).
    pub depthwise: bool,
    pub model: ModelKind,
    pub out_shape: Shape3,
}

impl ConvLayer {
    pub fn windows(&self) -> usize {
        self.out_shape.h * self.out_shape.w
    }

    /// Bits broadcast per window.
    pub fn window_bits(&self) -> usize {
        self.kh * self.kw * self.in_shape.c
    }

    pub fn weights_per_map(&self) -> usize {
        if self.depthwise {
            self.kh * self.kw
        } else {
            self.window_bits()
        }
    }

    pub fn neurons(&self) -> usize {
        self.out_shape.len()
    }

    /// Input-tensor index of bit `k` of window `w`.
    #[inline]
    pub fn input_index(&self, w: usize, k: usize) -> usize {
        let (oy, ox) = (w / self.out_shape.w, w % self.out_shape.w);
        let c = k % self.in_shape.c;
        let pos = k / self.in_shape.c;
        let (di, dj) = (pos / self.kw, pos % self.kw);
        self.in_shape.index(oy * self.stride + di, ox * self.stride + dj, c)
    }

    /// RAM words per output map held by a PE: weights plus neuron state.
    pub fn words_per_map(&self) -> usize {
        self.weights_per_map() + self.windows() * self.model.state_words()
    }

    /// Bits moved by the window-split broadcast of one time-step.
    pub fn scatter_bits(&self) -> usize {
        self.windows() * self.window_bits()
    }
}

/// Lowers `spec` to convolution form.
pub fn normalize_layer(spec: &LayerSpec, index: usize) -> Result<ConvLayer> {
    let s = spec.in_shape;
    let (kh, kw, stride, maps, depthwise) = match spec.kind {
        LayerKind::Conv => (spec.kernel, spec.kernel, 1, spec.outputs, false),
        LayerKind::Pool => (spec.kernel, spec.kernel, spec.kernel, s.c, true),
        LayerKind::Fc => (s.h, s.w, 1, spec.outputs, false),
    };
    let windows = window_split(s, kh, kw, stride).map_err(|e| match e {
        Error::Shape(m) => Error::Shape(format!("layer {index}: {m}")),
        other => other,
    })?;
    let (oh, ow) = windows.last().map(|&(y, x)| (y / stride + 1, x / stride + 1)).unwrap_or((0, 0));
    Ok(ConvLayer {
        index,
        source: spec.kind,
        in_shape: s,
        kh,
        kw,
        stride,
        out_maps: maps,
        depthwise,
        model: spec.model,
        out_shape: Shape3::new(oh, ow, maps),
    })
}

/// Row-major window origins of a `kh×kw` kernel sliding with `stride`, no padding.
pub fn window_split(in_shape: Shape3, kh: usize, kw: usize, stride: usize) -> Result<Vec<(usize, usize)>> {
    if stride == 0 || kh == 0 || kw == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    if kh > in_shape.h || kw > in_shape.w {
        return Err(Error::Shape(format!(
            "{kh}x{kw} kernel larger than {}x{} input",
            in_shape.h, in_shape.w
        )));
    }
    if (in_shape.h - kh) % stride != 0 || (in_shape.w - kw) % stride != 0 {
        return Err(Error::Shape(format!(
            "{kh}x{kw} kernel with stride {stride} does not tile a {}x{} input",
            in_shape.h, in_shape.w
        )));
    }
    let oh = (in_shape.h - kh) / stride + 1;
    let ow = (in_shape.w - kw) / stride + 1;
    Ok((0..oh)
        .flat_map(|y| (0..ow).map(move |x| (y * stride, x * stride)))
        .collect())
}

/// Synaptic weights of a layer, canonical index `o · weights_per_map + p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerWeights {
    pub per_map: usize,
    pub data: Vec<Fixed>,
}

impl LayerWeights {
    pub fn get(&self, map: usize, p: usize) -> Fixed {
        self.data[map * self.per_map + p]
    }
}

/// Pool layers average; other layers draw `U(−1, 1)·min(1, 8/√fan_in)` from a
/// ChaCha8 stream keyed on `(seed, layer)`.
pub fn init_weights(layer: &ConvLayer, seed: u64, fmt: QFormat) -> Result<LayerWeights> {
    let per_map = layer.weights_per_map();
    let n = per_map * layer.out_maps;
    let data = if layer.depthwise {
        let w = Fixed::from_f64(1.0 / (layer.kh * layer.kw) as f64, fmt)?;
        vec![w; n]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(layer.index as u64);
        let scale = (8.0 / (per_map as f64).sqrt()).min(1.0);
        (0..n)
            .map(|_| Fixed::saturating_from_f64(rng.random_range(-1.0..=1.0) * scale, fmt).0)
            .collect()
    };
    Ok(LayerWeights { per_map, data })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeAssignment {
    pub layer: usize,
    pub pe_id: usize,
    pub maps: Range<usize>,
}

impl PeAssignment {
    pub fn map_count(&self) -> usize {
        self.maps.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerAssignment {
    pub layer: usize,
    pub pes: Vec<PeAssignment>,
    /// RAM words used by each PE, including the reserve.
    pub ram_words: Vec<usize>,
}

/// Greedy packing of output maps into PEs of `capacity_words` RAM words, of
/// which `reserve_words` are kept free. PE ids are assigned layer by layer.
pub fn assign_pes(layers: &[ConvLayer], capacity_words: usize, reserve_words: usize) -> Result<Vec<LayerAssignment>> {
    let usable = capacity_words.saturating_sub(reserve_words);
    let mut next_id = 0;
    let mut out = Vec::with_capacity(layers.len());
    for l in layers {
        let per_map = l.words_per_map();
        let fit = usable / per_map;
        if fit == 0 {
            return Err(Error::Mapping {
                layer: l.index,
                msg: format!(
                    "one output map needs {per_map} words but a PE offers {usable} \
                     ({capacity_words} minus {reserve_words} reserved)"
                ),
            });
        }
        let mut pes = Vec::new();
        let mut ram_words = Vec::new();
        let mut start = 0;
        while start < l.out_maps {
            let end = (start + fit).min(l.out_maps);
            pes.push(PeAssignment {
                layer: l.index,
                pe_id: next_id,
                maps: start..end,
            });
            ram_words.push((end - start) * per_map + reserve_words);
            next_id += 1;
            start = end;
        }
        out.push(LayerAssignment {
            layer: l.index,
            pes,
            ram_words,
        });
    }
    Ok(out)
}

/// Interleaves per-PE outputs into the layer's `(outH, outW, maps)` tensor.
/// Each partial holds bit `w·local_maps + o` for window `w` and local map `o`.
pub fn merge_outputs(layer: &ConvLayer, partials: &[(Range<usize>, &SpikeBits)]) -> Result<SpikeTensor> {
    let mut owner = vec![false; layer.out_maps];
    let mut out = SpikeTensor::zeros(layer.out_shape);
    let windows = layer.windows();
    for (maps, bits) in partials {
        if maps.end > layer.out_maps || bits.len() != windows * maps.len() {
            return Err(Error::Incomplete(format!(
                "layer {}: partial for maps {maps:?} has {} bits",
                layer.index,
                bits.len()
            )));
        }
        for o in maps.clone() {
            if std::mem::replace(&mut owner[o], true) {
                return Err(Error::Incomplete(format!(
                    "layer {}: map {o} produced by more than one PE",
                    layer.index
                )));
            }
        }
        let local = maps.len();
        for i in bits.iter_ones() {
            let (w, o) = (i / local, i % local);
            out.bits_mut().set(w * layer.out_maps + maps.start + o, true);
        }
    }
    if let Some(o) = owner.iter().position(|&v| !v) {
        return Err(Error::Incomplete(format!("layer {}: map {o} missing", layer.index)));
    }
    Ok(out)
}

/// A network lowered, packed, and initialized.
#[derive(Clone, Debug)]
pub struct MappedNetwork {
    pub spec: NetworkSpec,
    pub layers: Vec<ConvLayer>,
    pub assignments: Vec<LayerAssignment>,
    pub weights: Vec<LayerWeights>,
}

impl MappedNetwork {
    pub fn build(spec: NetworkSpec, capacity_words: usize, reserve_words: usize, seed: u64, fmt: QFormat) -> Result<Self> {
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| normalize_layer(l, i))
            .collect::<Result<Vec<_>>>()?;
        let assignments = assign_pes(&layers, capacity_words, reserve_words)?;
        let weights = layers
            .iter()
            .map(|l| init_weights(l, seed, fmt))
            .collect::<Result<Vec<_>>>()?;
        Ok(MappedNetwork {
            spec,
            layers,
            assignments,
            weights,
        })
    }

    pub fn pe_count(&self) -> usize {
        self.assignments.iter().map(|a| a.pes.len()).sum()
    }

    pub fn models(&self) -> Vec<ModelKind> {
        let mut m: Vec<ModelKind> = self.layers.iter().map(|l| l.model).collect();
        m.sort();
        m.dedup();
        m
    }
}
