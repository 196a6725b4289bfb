use crate::error::{invalid, EvalError, Result};

/// Symmetric `n×n` similarity matrix with unit diagonal, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl KernelMatrix {
    /// Wraps explicit entries after checking shape, unit diagonal and symmetry
    /// within `1e-9`.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return invalid(format!("kernel needs n ≥ 1 and n² entries, got n = {n} with {}", entries.len()));
        }
        for i in 0..n {
            if entries[i * n + i] != 1.0 {
                return invalid(format!("kernel diagonal entry {i} is {}, expected 1", entries[i * n + i]));
            }
            for j in 0..i {
                let gap = (entries[i * n + j] - entries[j * n + i]).abs();
                if !(gap <= 1e-9) {
                    return Err(EvalError::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

/// Cosine-similarity Gram matrix of `samples`.
pub fn cosine_kernel(samples: &[Vec<f64>]) -> Result<KernelMatrix> {
    let Some(first) = samples.first() else {
        return invalid("cosine kernel of an empty sample set");
    };
    let dim = first.len();
    let mut sq_norms = Vec::with_capacity(samples.len());
    for (index, v) in samples.iter().enumerate() {
        if v.len() != dim {
            return invalid(format!("sample {index} has length {}, expected {dim}", v.len()));
        }
        let sq: f64 = v.iter().map(|x| x * x).sum();
        if !(sq > 0.0) || !sq.is_finite() {
            return Err(EvalError::ZeroVector { index });
        }
        sq_norms.push(sq);
    }
    let n = samples.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let dot: f64 = samples[i].iter().zip(&samples[j]).map(|(a, b)| a * b).sum();
            let cos = (dot / (sq_norms[i] * sq_norms[j]).sqrt()).clamp(-1.0, 1.0);
            k[i * n + j] = cos;
            k[j * n + i] = cos;
        }
    }
    Ok(KernelMatrix { n, entries: k })
}
