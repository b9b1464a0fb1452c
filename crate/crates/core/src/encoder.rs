//! Rate coding and dataset ingestion.
//!
//! A pixel of normalized intensity `p` spikes at time-step `t` with
//! probability `fp · p`. Every draw comes from a ChaCha8 stream selected by
//! the image index and positioned by `(t, pixel)`, so a spike depends only
//! on `(seed, image, pixel, t)` and not on the order in which it is requested.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scheduler::SpikeSource;
use crate::spikes::{Shape3, SpikeTensor};

/// Normalized image in HWC layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub shape: Shape3,
    pub pixels: Vec<f64>,
    pub label: Option<u8>,
}

impl Image {
    pub fn new(shape: Shape3, pixels: Vec<f64>, label: Option<u8>) -> Result<Self> {
        if pixels.len() != shape.len() {
            return Err(Error::Shape(format!("{} pixels for a {shape} image", pixels.len())));
        }
        Ok(Image { shape, pixels, label })
    }

    pub fn validate(&self) -> Result<()> {
        match self.pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            Some(i) => Err(Error::Input(format!("pixel {i} = {} outside [0, 1]", self.pixels[i]))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub images: Vec<Image>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> Option<Shape3> {
        self.images.first().map(|i| i.shape)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateCoder {
    fp: f64,
    seed: u64,
}

impl RateCoder {
    pub fn new(fp: f64, seed: u64) -> Result<Self> {
        if !(fp > 0.0 && fp <= 1.0) {
            return Err(Error::Range { value: fp, min: 0.0, max: 1.0 });
        }
        Ok(RateCoder { fp, seed })
    }

    pub fn fp(&self) -> f64 {
        self.fp
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Spikes of image number `index` at time-step `t`.
    pub fn encode_step(&self, image: &Image, index: usize, t: usize) -> Result<SpikeTensor> {
        image.validate()?;
        let n = image.pixels.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        // each f64 draw consumes two 32-bit words
        rng.set_word_pos(2 * (t as u128) * (n as u128));
        let mut out = SpikeTensor::zeros(image.shape);
        for (i, &p) in image.pixels.iter().enumerate() {
            let u: f64 = rng.random();
            if u < self.fp * p {
                out.bits_mut().set(i, true);
            }
        }
        Ok(out)
    }

    pub fn encode(&self, image: &Image, index: usize, timesteps: usize) -> Result<Vec<SpikeTensor>> {
        (0..timesteps).map(|t| self.encode_step(image, index, t)).collect()
    }
}

/// A dataset bound to a rate coder.
#[derive(Clone, Debug)]
pub struct RateCodedSource<'a> {
    pub dataset: &'a Dataset,
    pub coder: RateCoder,
}

impl SpikeSource for RateCodedSource<'_> {
    fn shape(&self) -> Shape3 {
        self.dataset.shape().unwrap_or(Shape3::new(0, 0, 0))
    }

    fn spikes(&self, image: usize, t: usize) -> Result<SpikeTensor> {
        let img = self
            .dataset
            .images
            .get(image)
            .ok_or_else(|| Error::Input(format!("image {image} requested, dataset has {}", self.dataset.len())))?;
        self.coder.encode_step(img, image, t)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            offset: bytes.len(),
            msg: format!("truncated header, needed 4 bytes at {offset}"),
        })
}

fn expect_magic(bytes: &[u8], magic: u32) -> Result<()> {
    let got = be_u32(bytes, 0)?;
    if got != magic {
        return Err(Error::Format {
            offset: 0,
            msg: format!("magic {got:#010x}, expected {magic:#010x}"),
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    bytes.get(start..start + len).ok_or_else(|| Error::Format {
        offset: bytes.len(),
        msg: format!("truncated payload, expected {len} bytes from {start}"),
    })
}

/// Parses an IDX3 image file (`0x00000803`).
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    expect_magic(bytes, 0x0000_0803)?;
    let n = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows * cols;
    let data = payload(bytes, 16, n * size)?;
    let shape = Shape3::new(rows, cols, 1);
    Ok(data
        .chunks_exact(size.max(1))
        .take(n)
        .map(|px| Image {
            shape,
            pixels: px.iter().map(|&b| b as f64 / 255.0).collect(),
            label: None,
        })
        .collect())
}

/// Parses an IDX1 label file (`0x00000801`).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    expect_magic(bytes, 0x0000_0801)?;
    let n = be_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, n)?.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_mnist(images: &Path, labels: Option<&Path>) -> Result<Dataset> {
    let mut imgs = parse_idx_images(&read(images)?)?;
    if let Some(path) = labels {
        let lbl = parse_idx_labels(&read(path)?)?;
        if lbl.len() != imgs.len() {
            return Err(Error::Input(format!(
                "{} images but {} labels",
                imgs.len(),
                lbl.len()
            )));
        }
        imgs.iter_mut().zip(lbl).for_each(|(i, l)| i.label = Some(l));
    }
    Ok(Dataset { images: imgs })
}

pub const CIFAR_RECORD: usize = 1 + 3 * 32 * 32;

/// Parses a CIFAR-10 binary batch: per record one label byte, then the red,
/// green and blue 32×32 planes. Output images are HWC.
pub fn parse_cifar10(bytes: &[u8]) -> Result<Vec<Image>> {
    if bytes.len() % CIFAR_RECORD != 0 {
        return Err(Error::Format {
            offset: bytes.len() - bytes.len() % CIFAR_RECORD,
            msg: format!("{} bytes is not a whole number of {CIFAR_RECORD}-byte records", bytes.len()),
        });
    }
    let shape = Shape3::new(32, 32, 3);
    Ok(bytes
        .chunks_exact(CIFAR_RECORD)
        .map(|rec| {
            let mut pixels = vec![0.0; shape.len()];
            for c in 0..3 {
                for (pos, &b) in rec[1 + c * 1024..1 + (c + 1) * 1024].iter().enumerate() {
                    pixels[pos * 3 + c] = b as f64 / 255.0;
                }
            }
            Image { shape, pixels, label: Some(rec[0]) }
        })
        .collect())
}

pub fn load_cifar10(path: &Path) -> Result<Dataset> {
    Ok(Dataset { images: parse_cifar10(&read(path)?)? })
}

/// Seeded stand-in dataset: each image is a few bright rectangles on a dark
/// background, with labels cycling through 0..10.
pub fn synthetic(shape: Shape3, count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..count)
        .map(|n| {
            let mut pixels = vec![0.0; shape.len()];
            for _ in 0..3 {
                let (y0, x0) = (rng.random_range(0..shape.h), rng.random_range(0..shape.w));
                let (hh, ww) = (rng.random_range(1..=shape.h.div_ceil(2)), rng.random_range(1..=shape.w.div_ceil(2)));
                let level: f64 = rng.random_range(0.5..=1.0);
                for y in y0..(y0 + hh).min(shape.h) {
                    for x in x0..(x0 + ww).min(shape.w) {
                        for c in 0..shape.c {
                            pixels[shape.index(y, x, c)] = level;
                        }
                    }
                }
            }
            Image { shape, pixels, label: Some((n % 10) as u8) }
        })
        .collect();
    Dataset { images }
}
