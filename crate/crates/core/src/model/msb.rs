//! Multiscale residual block.
//!
//! ```text
//!        ┌─ conv3×3(F) ─┐
//!   x ───┼─ conv5×5(F) ─┼─ concat(3F) ─ conv1×1(3F) ─ conv3×3(F) ─┐
//!    │   └─ conv7×7(F) ─┘                                          (+) ─ conv1×1(F) ─ y
//!    └──────────────────── conv3×3(F) ─────────────────────────────┘
//! ```
//!
//! Every convolution is followed by a ReLU and uses same padding.

use crate::error::{shape_err, Result};
use crate::graph::{Graph, Var};
use crate::model::params::{Bound, ParamId, ParamStore};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Weight and bias of one convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvParams {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl ConvParams {
    /// Conv weight `[out, in, k, k]`, He-uniform with `fan_in = in·k²`.
    pub fn conv<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Self {
        let weight = store.push_he_uniform(format!("{name}.weight"), &[cout, cin, k, k], cin * k * k, rng);
        let bias = store.push(format!("{name}.bias"), crate::Tensor::zeros(&[cout]));
        Self { weight, bias }
    }

    /// Transposed-conv weight `[in, out, k, k]`, He-uniform with `fan_in = in·k²`.
    pub fn conv_transpose<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        cin: usize,
        cout: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Self {
        let weight = store.push_he_uniform(format!("{name}.weight"), &[cin, cout, k, k], cin * k * k, rng);
        let bias = store.push(format!("{name}.bias"), crate::Tensor::zeros(&[cout]));
        Self { weight, bias }
    }

    /// Dense weight `[in, out]`.
    pub fn dense<T: Scalar>(store: &mut ParamStore<T>, name: &str, din: usize, dout: usize, rng: &mut Rng) -> Self {
        let weight = store.push_he_uniform(format!("{name}.weight"), &[din, dout], din, rng);
        let bias = store.push(format!("{name}.bias"), crate::Tensor::zeros(&[dout]));
        Self { weight, bias }
    }

    /// Same-padded convolution followed by ReLU.
    pub fn apply_conv<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        p: &Bound,
        x: Var,
        stride: usize,
    ) -> Result<Var> {
        let w = p.var(self.weight);
        let k = g.value(w).shape()[2];
        let y = g.conv2d(x, w, p.var(self.bias), stride, (k - 1) / 2)?;
        Ok(g.relu(y))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsbParams {
    pub in_channels: usize,
    pub filters: usize,
    pub branch3: ConvParams,
    pub branch5: ConvParams,
    pub branch7: ConvParams,
    pub fuse_pointwise: ConvParams,
    pub fuse_out: ConvParams,
    pub skip_proj: ConvParams,
    pub post_pointwise: ConvParams,
}

impl MsbParams {
    pub fn allocate<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        cin: usize,
        filters: usize,
        rng: &mut Rng,
    ) -> Self {
        let f = filters;
        Self {
            in_channels: cin,
            filters: f,
            branch3: ConvParams::conv(store, &format!("{name}.branch3"), cin, f, 3, rng),
            branch5: ConvParams::conv(store, &format!("{name}.branch5"), cin, f, 5, rng),
            branch7: ConvParams::conv(store, &format!("{name}.branch7"), cin, f, 7, rng),
            fuse_pointwise: ConvParams::conv(store, &format!("{name}.fuse_pointwise"), 3 * f, 3 * f, 1, rng),
            fuse_out: ConvParams::conv(store, &format!("{name}.fuse_out"), 3 * f, f, 3, rng),
            skip_proj: ConvParams::conv(store, &format!("{name}.skip_proj"), cin, f, 3, rng),
            post_pointwise: ConvParams::conv(store, &format!("{name}.post_pointwise"), f, f, 1, rng),
        }
    }
}

/// `relu(post1×1(relu(skip3×3(x)) + fuse(concat(b3(x), b5(x), b7(x)))))`.
pub fn msb_forward<T: Scalar>(g: &mut Graph<T>, params: &Bound, p: &MsbParams, x: Var) -> Result<Var> {
    let shape = g.value(x).shape();
    if shape.len() != 4 || shape[1] != p.in_channels {
        return shape_err(format!(
            "multiscale block expects {} input channels, got shape {shape:?}",
            p.in_channels
        ));
    }
    let b3 = p.branch3.apply_conv(g, params, x, 1)?;
    let b5 = p.branch5.apply_conv(g, params, x, 1)?;
    let b7 = p.branch7.apply_conv(g, params, x, 1)?;
    let cat = g.concat_channels(&[b3, b5, b7])?;
    let mixed = p.fuse_pointwise.apply_conv(g, params, cat, 1)?;
    let fused = p.fuse_out.apply_conv(g, params, mixed, 1)?;
    let skip = p.skip_proj.apply_conv(g, params, x, 1)?;
    let sum = g.add(skip, fused)?;
    p.post_pointwise.apply_conv(g, params, sum, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;

    #[test]
    fn zero_input_zero_bias_gives_zero_output() {
        let mut store = ParamStore::<f64>::new();
        let p = MsbParams::allocate(&mut store, "msb", 4, 8, &mut Rng::new(1));
        let mut g = Graph::new();
        let bound = store.bind(&mut g, false);
        let x = g.input(Tensor::zeros(&[1, 4, 8, 8]));
        let y = msb_forward(&mut g, &bound, &p, x).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 8, 8, 8]);
        assert!(g.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shapes_and_concat_width() {
        let mut store = ParamStore::<f32>::new();
        let p = MsbParams::allocate(&mut store, "msb", 16, 32, &mut Rng::new(2));
        assert_eq!(store.get(p.fuse_pointwise.weight).shape(), &[96, 96, 1, 1]);
        let mut g = Graph::new();
        let bound = store.bind(&mut g, false);
        let x = g.input(Tensor::full(&[1, 16, 12, 12], 0.5));
        let y = msb_forward(&mut g, &bound, &p, x).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 32, 12, 12]);
        let wrong = g.input(Tensor::zeros(&[1, 8, 12, 12]));
        assert!(msb_forward(&mut g, &bound, &p, wrong).is_err());
    }
}
