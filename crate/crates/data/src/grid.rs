use tide_core::Tensor;

use crate::error::{DataError, Result};

/// Tiles `[3, H, W]` images row-major on a white canvas with `separator`
/// pixels between cells. Output is `rows·H + (rows−1)·sep` by
/// `cols·W + (cols−1)·sep`, with `cols = min(columns, n)`.
pub fn compose_grid(images: &[Tensor<f32>], columns: usize, separator: usize) -> Result<Tensor<f32>> {
    let Some(first) = images.first() else {
        return Err(DataError::Invalid("cannot compose an empty grid".into()));
    };
    if columns == 0 {
        return Err(DataError::Invalid("grid needs at least one column".into()));
    }
    let s = first.shape().to_vec();
    if s.len() != 3 {
        return Err(DataError::Invalid(format!("grid images must be [C, H, W], got {s:?}")));
    }
    if let Some((i, t)) = images.iter().enumerate().find(|(_, t)| t.shape() != s.as_slice()) {
        return Err(DataError::Invalid(format!("image {i} has shape {:?}, expected {s:?}", t.shape())));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    let cols = columns.min(images.len());
    let rows = images.len().div_ceil(cols);
    let gh = rows * h + (rows - 1) * separator;
    let gw = cols * w + (cols - 1) * separator;
    let mut canvas = vec![1.0f32; c * gh * gw];
    for (k, img) in images.iter().enumerate() {
        let (r, col) = (k / cols, k % cols);
        let (oy, ox) = (r * (h + separator), col * (w + separator));
        for ch in 0..c {
            for y in 0..h {
                let src = &img.data()[(ch * h + y) * w..][..w];
                canvas[(ch * gh + oy + y) * gw + ox..][..w].copy_from_slice(src);
            }
        }
    }
    Ok(Tensor::from_vec(&[c, gh, gw], canvas)?)
}
