//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{invalid, EvalError, Result};
use crate::kernel::KernelMatrix;

/// Off-diagonal Frobenius norm at which rotation stops.
pub const JACOBI_TOL: f64 = 1e-10;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Negative eigenvalues down to this level are treated as rounding noise.
pub const NEGATIVE_CLAMP: f64 = -1e-8;

/// Eigenpairs with `vectors` column `j` (row-major `n×n`) belonging to `values[j]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Full eigendecomposition of the symmetric row-major `n×n` matrix `a`,
/// eigenpairs sorted by descending eigenvalue.
pub fn jacobi_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    if n == 0 || a.len() != n * n {
        return invalid(format!("expected a square matrix of {n}² entries, got {}", a.len()));
    }
    for i in 0..n {
        for j in 0..i {
            let gap = (a[i * n + j] - a[j * n + i]).abs();
            if !(gap <= 1e-9 * (1.0 + a[i * n + j].abs())) {
                return Err(EvalError::NotSymmetric { i, j, gap });
            }
        }
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut sweeps = 0;
    while off_norm(&m, n) >= JACOBI_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return invalid(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                off_norm(&m, n)
            ));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                // Rotation angle zeroing m[p][q]; t is the smaller root for stability.
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + col] = v[r * n + src];
        }
    }
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Spectrum of `K/n`, descending, with rounding-level negatives set to zero.
pub fn symmetric_eigenvalues(k: &KernelMatrix) -> Result<Vec<f64>> {
    let n = k.n();
    let scaled: Vec<f64> = k.entries().iter().map(|x| x / n as f64).collect();
    let mut values = jacobi_eigen(&scaled, n)?.values;
    for (i, l) in values.iter_mut().enumerate() {
        if *l < 0.0 {
            if *l < NEGATIVE_CLAMP {
                return invalid(format!("kernel is not positive semi-definite: eigenvalue {i} is {l:e}"));
            }
            *l = 0.0;
        }
    }
    Ok(values)
}
