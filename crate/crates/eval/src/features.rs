use tide_core::{Tensor, TideVae};

use crate::error::{invalid, Result};

/// Maps images `[3, H, W]` to fixed-length vectors.
pub trait FeatureExtractor {
    fn extract(&self, images: &[Tensor<f32>]) -> Result<Vec<Vec<f64>>>;
}

/// Raw flattened pixel values, no centering.
#[derive(Clone, Copy, Debug, Default)]
pub struct PixelExtractor;

impl FeatureExtractor for PixelExtractor {
    fn extract(&self, images: &[Tensor<f32>]) -> Result<Vec<Vec<f64>>> {
        Ok(images.iter().map(|t| t.data().iter().map(|&v| v as f64).collect()).collect())
    }
}

/// Trained encoder `mu` followed by per-channel mean and variance over a
/// `grid × grid` partition of the image.
pub struct EncoderPatchExtractor<'a> {
    pub model: &'a TideVae<f32>,
    pub grid: usize,
}

impl<'a> EncoderPatchExtractor<'a> {
    pub fn new(model: &'a TideVae<f32>) -> Self {
        Self { model, grid: 4 }
    }

    pub fn dim(&self) -> usize {
        let c = self.model.config();
        c.latent_dim + 2 * c.channels * self.grid * self.grid
    }
}

/// Mean and variance of each channel in each grid cell, channel-major.
pub fn patch_statistics(image: &Tensor<f32>, grid: usize) -> Vec<f64> {
    let s = image.shape();
    let (c, h, w) = (s[0], s[1], s[2]);
    let mut out = Vec::with_capacity(2 * c * grid * grid);
    for ch in 0..c {
        let plane = &image.data()[ch * h * w..(ch + 1) * h * w];
        for gy in 0..grid {
            for gx in 0..grid {
                let (y0, y1) = (gy * h / grid, ((gy + 1) * h / grid).max(gy * h / grid + 1).min(h));
                let (x0, x1) = (gx * w / grid, ((gx + 1) * w / grid).max(gx * w / grid + 1).min(w));
                let cell = (y0..y1).flat_map(|y| (x0..x1).map(move |x| plane[y * w + x] as f64));
                let count = ((y1 - y0) * (x1 - x0)) as f64;
                let (sum, sq) = cell.fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
                let mean = sum / count;
                out.push(mean);
                out.push((sq / count - mean * mean).max(0.0));
            }
        }
    }
    out
}

impl FeatureExtractor for EncoderPatchExtractor<'_> {
    fn extract(&self, images: &[Tensor<f32>]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(16) {
            let refs: Vec<&Tensor<f32>> = chunk.iter().collect();
            let stats = self.model.encode(&Tensor::stack(&refs)?)?;
            let latent = self.model.config().latent_dim;
            for (i, img) in chunk.iter().enumerate() {
                let mut v: Vec<f64> = stats.mu.data()[i * latent..(i + 1) * latent].iter().map(|&x| x as f64).collect();
                v.extend(patch_statistics(img, self.grid));
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// One feature vector per image; all vectors must share a length.
pub fn feature_embed(images: &[Tensor<f32>], extractor: &dyn FeatureExtractor) -> Result<Vec<Vec<f64>>> {
    let feats = extractor.extract(images)?;
    if feats.len() != images.len() {
        return invalid(format!("extractor returned {} vectors for {} images", feats.len(), images.len()));
    }
    if let Some(first) = feats.first() {
        if let Some((i, v)) = feats.iter().enumerate().find(|(_, v)| v.len() != first.len()) {
            return invalid(format!("feature {i} has length {}, expected {}", v.len(), first.len()));
        }
    }
    Ok(feats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_stats_of_constant_image() {
        let img = Tensor::full(&[3, 8, 8], 0.25f32);
        let s = patch_statistics(&img, 4);
        assert_eq!(s.len(), 96);
        for pair in s.chunks(2) {
            assert!((pair[0] - 0.25).abs() < 1e-7 && pair[1].abs() < 1e-12);
        }
    }

    struct Ragged;
    impl FeatureExtractor for Ragged {
        fn extract(&self, images: &[Tensor<f32>]) -> Result<Vec<Vec<f64>>> {
            Ok((0..images.len()).map(|i| vec![1.0; i + 1]).collect())
        }
    }

    #[test]
    fn inconsistent_dimension_rejected() {
        let imgs = vec![Tensor::zeros(&[3, 2, 2]); 2];
        assert!(feature_embed(&imgs, &Ragged).is_err());
    }
}
