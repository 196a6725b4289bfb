use tide_core::Tensor;

use crate::error::{DataError, Result};

/// Binary label: 0 = normal, 1 = abnormal.
pub type Label = u8;

pub const NORMAL: Label = 0;
pub const ABNORMAL: Label = 1;

/// Images `[3, H, W]` in `[0, 1]` with binary labels and source identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    images: Vec<Tensor<f32>>,
    labels: Vec<Label>,
    paths: Vec<String>,
}

impl LabeledDataset {
    pub fn new(images: Vec<Tensor<f32>>, labels: Vec<Label>, paths: Vec<String>) -> Result<Self> {
        if images.len() != labels.len() || images.len() != paths.len() {
            return Err(DataError::Invalid(format!(
                "dataset lists disagree: {} images, {} labels, {} paths",
                images.len(),
                labels.len(),
                paths.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(DataError::Invalid(format!("label {l} is not 0 or 1")));
        }
        if let Some(first) = images.first() {
            if first.rank() != 3 {
                return Err(DataError::Invalid(format!("images must be [C, H, W], got {:?}", first.shape())));
            }
            if let Some((i, img)) = images.iter().enumerate().find(|(_, t)| t.shape() != first.shape()) {
                return Err(DataError::Invalid(format!(
                    "image {i} ({}) has shape {:?}, expected {:?}",
                    paths[i],
                    img.shape(),
                    first.shape()
                )));
            }
        }
        Ok(Self { images, labels, paths })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Tensor<f32>] {
        &self.images
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    /// `(height, width)` shared by every image.
    pub fn resolution(&self) -> Option<(usize, usize)> {
        self.images.first().map(|t| (t.shape()[1], t.shape()[2]))
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            paths: indices.iter().map(|&i| self.paths[i].clone()).collect(),
        }
    }

    pub fn with_label(&self, label: Label) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
        self.subset(&idx)
    }

    /// Images stacked into `[N, 3, H, W]`.
    pub fn stacked(&self) -> Result<Tensor<f32>> {
        let refs: Vec<&Tensor<f32>> = self.images.iter().collect();
        Ok(Tensor::stack(&refs)?)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut images = self.images.clone();
        images.extend(other.images.iter().cloned());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut paths = self.paths.clone();
        paths.extend(other.paths.iter().cloned());
        Self::new(images, labels, paths)
    }

    /// Wraps a generated batch `[N, 3, H, W]` under one label.
    pub fn from_batch(batch: &Tensor<f32>, label: Label, prefix: &str) -> Result<Self> {
        let images = batch.unstack();
        let paths = (0..images.len()).map(|i| format!("{prefix}-{i:04}")).collect();
        Self::new(images, vec![label; batch.shape()[0]], paths)
    }
}
