use std::fmt;

use tide_core::Tensor;

use crate::eigen::symmetric_eigenvalues;
use crate::error::{invalid, Result};
use crate::features::{feature_embed, FeatureExtractor, PixelExtractor};
use crate::kernel::{cosine_kernel, KernelMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// Cosine similarity of raw flattened pixels.
    Pixel,
    /// Cosine similarity of extractor features.
    Feature,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pixel => "pixel",
            Self::Feature => "feature",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiversityReport {
    /// Exponential of the spectral entropy, in `[1, n]`.
    pub delta: f64,
    /// Spectrum of `K/n`, descending.
    pub eigenvalues: Vec<f64>,
    pub kernel: KernelKind,
    /// `δ_g / δ_r` when this report describes a generated set.
    pub relative: Option<f64>,
}

/// Shannon entropy (natural log, `0·ln 0 = 0`) of a spectrum.
pub fn spectral_entropy(eigenvalues: &[f64]) -> f64 {
    -eigenvalues.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum::<f64>()
}

pub fn vendi_diversity(k: &KernelMatrix, kernel: KernelKind) -> Result<DiversityReport> {
    let eigenvalues = symmetric_eigenvalues(k)?;
    let delta = spectral_entropy(&eigenvalues).exp();
    Ok(DiversityReport { delta, eigenvalues, kernel, relative: None })
}

/// Diversity of an image set under the pixel kernel or the given extractor.
pub fn image_diversity(
    images: &[Tensor<f32>],
    kernel: KernelKind,
    extractor: Option<&dyn FeatureExtractor>,
) -> Result<DiversityReport> {
    if images.is_empty() {
        return invalid("diversity of an empty image set");
    }
    let feats = match (kernel, extractor) {
        (KernelKind::Pixel, _) => feature_embed(images, &PixelExtractor)?,
        (KernelKind::Feature, Some(x)) => feature_embed(images, x)?,
        (KernelKind::Feature, None) => return invalid("feature kernel needs an extractor"),
    };
    vendi_diversity(&cosine_kernel(&feats)?, kernel)
}

/// Real and generated diversity with `δ̃ = δ_g / δ_r` (not capped at 1).
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeDiversity {
    pub real: DiversityReport,
    pub generated: DiversityReport,
    pub ratio: f64,
}

pub fn relative_diversity(
    generated: &[Tensor<f32>],
    real: &[Tensor<f32>],
    kernel: KernelKind,
    extractor: Option<&dyn FeatureExtractor>,
) -> Result<RelativeDiversity> {
    if generated.is_empty() || real.is_empty() {
        return invalid("relative diversity needs non-empty generated and real sets");
    }
    let real = image_diversity(real, kernel, extractor)?;
    let mut generated = image_diversity(generated, kernel, extractor)?;
    let ratio = if generated.delta == real.delta { 1.0 } else { generated.delta / real.delta };
    generated.relative = Some(ratio);
    Ok(RelativeDiversity { real, generated, ratio })
}
