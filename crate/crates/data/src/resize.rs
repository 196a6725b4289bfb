use tide_core::Tensor;

use crate::error::{DataError, Result};

/// Source sample positions for one axis: `(i0, i1, frac)` per output index.
fn taps(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let pos = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, (pos - i0 as f64) as f32)
        })
        .collect()
}

/// Separable bilinear resize of `[C, H, W]` with half-pixel centers.
pub fn resize_bilinear(image: &Tensor<f32>, target: (usize, usize)) -> Result<Tensor<f32>> {
    let s = image.shape();
    if s.len() != 3 {
        return Err(DataError::Invalid(format!("resize expects [C, H, W], got {s:?}")));
    }
    let (th, tw) = target;
    if th == 0 || tw == 0 {
        return Err(DataError::Invalid(format!("zero target extent {th}x{tw}")));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    if (h, w) == (th, tw) {
        return Ok(image.clone());
    }
    let ys = taps(h, th);
    let xs = taps(w, tw);
    let src = image.data();
    let mut out = Vec::with_capacity(c * th * tw);
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let top = plane[y0 * w + x0] * (1.0 - fx) + plane[y0 * w + x1] * fx;
                let bottom = plane[y1 * w + x0] * (1.0 - fx) + plane[y1 * w + x1] * fx;
                out.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
            }
        }
    }
    Ok(Tensor::from_vec(&[c, th, tw], out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_constant() {
        let img = Tensor::from_vec(&[3, 2, 3], (0..18).map(|v| v as f32 / 17.0).collect()).unwrap();
        assert_eq!(resize_bilinear(&img, (2, 3)).unwrap(), img);
        let flat = Tensor::full(&[3, 7, 5], 0.37f32);
        let out = resize_bilinear(&flat, (12, 9)).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.37).abs() < 1e-6));
        assert!(resize_bilinear(&flat, (0, 3)).is_err());
    }

    #[test]
    fn halving_a_ramp_averages_2x2_blocks() {
        // With half-pixel centers, output (i, j) samples source (2i+0.5, 2j+0.5).
        let ramp: Vec<f32> = (0..16).map(|v| v as f32 / 15.0).collect();
        let img = Tensor::from_vec(&[1, 4, 4], ramp.clone()).unwrap();
        let out = resize_bilinear(&img, (2, 2)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let block = [(2 * i, 2 * j), (2 * i, 2 * j + 1), (2 * i + 1, 2 * j), (2 * i + 1, 2 * j + 1)];
                let want: f32 = block.iter().map(|&(y, x)| ramp[y * 4 + x]).sum::<f32>() / 4.0;
                assert!((out.data()[i * 2 + j] - want).abs() < 1e-6);
            }
        }
    }
}
