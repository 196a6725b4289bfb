//! Procedural two-class toy images.
//!
//! Class 0 is a smooth pinkish color field. Class 1 is the same kind of field
//! with a dark, soft-edged, rotated ellipse painted over it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use tide_core::{Rng, Tensor};

use crate::dataset::{Label, LabeledDataset, ABNORMAL, NORMAL};
use crate::error::{DataError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyKind {
    /// Sum of broad Gaussian color blobs.
    Blobs,
    /// Low-frequency oriented sinusoidal bands.
    Stripes,
}

impl FromStr for ToyKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blobs" => Ok(Self::Blobs),
            "stripes" => Ok(Self::Stripes),
            other => Err(DataError::Invalid(format!("unknown toy kind {other:?} (expected blobs or stripes)"))),
        }
    }
}

impl fmt::Display for ToyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Blobs => "blobs",
            Self::Stripes => "stripes",
        })
    }
}

const LESION_COLOR: [f64; 3] = [0.08, 0.03, 0.03];

fn background(kind: ToyKind, size: usize, rng: &mut Rng) -> Vec<[f64; 3]> {
    let base = [rng.uniform_range(0.75, 0.95), rng.uniform_range(0.35, 0.6), rng.uniform_range(0.2, 0.4)];
    let mut px = vec![base; size * size];
    let s = size as f64;
    match kind {
        ToyKind::Blobs => {
            let count = 3 + rng.below(3);
            for _ in 0..count {
                let (cy, cx) = (rng.uniform() * s, rng.uniform() * s);
                let sigma = rng.uniform_range(0.2, 0.4) * s;
                let amp = [rng.uniform_range(-0.12, 0.12), rng.uniform_range(-0.12, 0.12), rng.uniform_range(-0.08, 0.08)];
                for y in 0..size {
                    for x in 0..size {
                        let d2 = (y as f64 + 0.5 - cy).powi(2) + (x as f64 + 0.5 - cx).powi(2);
                        let w = (-d2 / (2.0 * sigma * sigma)).exp();
                        for c in 0..3 {
                            px[y * size + x][c] += amp[c] * w;
                        }
                    }
                }
            }
        }
        ToyKind::Stripes => {
            for _ in 0..2 {
                let theta = rng.uniform() * PI;
                let cycles = rng.uniform_range(1.0, 3.0);
                let phase = rng.uniform() * 2.0 * PI;
                let amp = [rng.uniform_range(0.04, 0.1), rng.uniform_range(0.04, 0.1), rng.uniform_range(0.02, 0.06)];
                let (dy, dx) = (theta.sin(), theta.cos());
                for y in 0..size {
                    for x in 0..size {
                        let t = ((y as f64 + 0.5) * dy + (x as f64 + 0.5) * dx) / s;
                        let w = (2.0 * PI * cycles * t + phase).sin();
                        for c in 0..3 {
                            px[y * size + x][c] += amp[c] * w;
                        }
                    }
                }
            }
        }
    }
    px
}

fn paint_lesion(px: &mut [[f64; 3]], size: usize, rng: &mut Rng) {
    let s = size as f64;
    let (cy, cx) = (rng.uniform_range(0.25, 0.75) * s, rng.uniform_range(0.25, 0.75) * s);
    let (a, b) = (rng.uniform_range(0.12, 0.22) * s, rng.uniform_range(0.12, 0.22) * s);
    let theta = rng.uniform() * PI;
    let (sin, cos) = theta.sin_cos();
    // soft edge about one pixel wide at 32×32, scaled with resolution
    let edge = 0.06;
    for y in 0..size {
        for x in 0..size {
            let (oy, ox) = (y as f64 + 0.5 - cy, x as f64 + 0.5 - cx);
            let u = (ox * cos + oy * sin) / a;
            let v = (-ox * sin + oy * cos) / b;
            let r = (u * u + v * v).sqrt();
            let alpha = 1.0 / (1.0 + ((r - 1.0) / edge).exp());
            let p = &mut px[y * size + x];
            for c in 0..3 {
                p[c] = p[c] * (1.0 - alpha) + LESION_COLOR[c] * alpha;
            }
        }
    }
}

fn to_tensor(px: &[[f64; 3]], size: usize) -> Tensor<f32> {
    let plane = size * size;
    let mut data = vec![0.0f32; 3 * plane];
    for (i, p) in px.iter().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = p[c].clamp(0.02, 0.98) as f32;
        }
    }
    Tensor::from_vec(&[3, size, size], data).expect("toy image shape")
}

/// One toy image. Each call consumes a fixed fork of `rng`.
pub fn toy_image(kind: ToyKind, label: Label, size: usize, rng: &mut Rng) -> Tensor<f32> {
    let mut own = rng.fork();
    let mut px = background(kind, size, &mut own);
    if label == ABNORMAL {
        paint_lesion(&mut px, size, &mut own);
    }
    to_tensor(&px, size)
}

/// `n` normal images followed by `n` abnormal images at `resolution`².
pub fn make_toy_dataset(kind: ToyKind, n: usize, resolution: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 || resolution == 0 {
        return Err(DataError::Invalid(format!("toy dataset needs n ≥ 1 and resolution ≥ 1, got {n} and {resolution}")));
    }
    let mut rng = Rng::new(seed);
    let mut images = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    let mut paths = Vec::with_capacity(2 * n);
    for label in [NORMAL, ABNORMAL] {
        for i in 0..n {
            images.push(toy_image(kind, label, resolution, &mut rng));
            labels.push(label);
            paths.push(format!("{kind}-{label}-{i:04}.ppm"));
        }
    }
    LabeledDataset::new(images, labels, paths)
}
