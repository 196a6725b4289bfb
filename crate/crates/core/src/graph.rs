//! Reverse-mode automatic differentiation over whole-tensor operations.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! Nodes are appended in evaluation order, so insertion order is a valid
//! topological order and [`Graph::backward`] simply walks it in reverse,
//! visiting each node once and accumulating into its inputs.
//!
//! ```
//! use tide_core::{Graph, Tensor};
//!
//! let mut g = Graph::<f64>::new();
//! let x = g.param(Tensor::from_vec(&[2], vec![1.0, -1.0]).unwrap());
//! let y = g.relu(x);
//! let loss = g.sum(y);
//! let grads = g.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap().data(), &[1.0, 0.0]);
//! ```

use crate::conv::{self, ConvGeometry};
use crate::error::{shape_err, Error, Result};
use crate::scalar::{gemm, MatRef, Scalar};
use crate::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    LogSigmoid,
}

enum Op<T> {
    Leaf,
    Conv2d { x: Var, w: Var, b: Var, geom: ConvGeometry },
    ConvTranspose2d { x: Var, w: Var, b: Var, geom: ConvGeometry },
    Dense { x: Var, w: Var, b: Var },
    Relu(Var),
    LogSigmoid(Var),
    Concat(Vec<Var>),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Reshape(Var),
    Sum(Var),
    GlobalAvgPool(Var),
    Reparameterize { mu: Var, logvar: Var, eps: Tensor<T> },
    GaussianKl { mu: Var, logvar: Var },
    BernoulliNll { logits: Var, target: Tensor<T> },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Computation graph confined to one thread of evaluation.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    /// Fixed ReLU gates consumed in evaluation order, with a cursor.
    gates: Option<(Vec<bool>, usize)>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of leaf nodes produced by one backward pass.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn stable_softplus<T: Scalar>(a: T) -> T {
    a.max(T::zero()) + (-a.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(a: T) -> T {
    if a >= T::zero() {
        T::one() / (T::one() + (-a).exp())
    } else {
        let e = a.exp();
        e / (T::one() + e)
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        Some(acc) => acc.data_mut().iter_mut().zip(g.data()).for_each(|(a, &b)| *a += b),
        None => *slot = Some(g),
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), gates: None }
    }

    /// A graph whose ReLUs pass or block each entry by the given bits (as
    /// produced by [`Graph::relu_pattern`]) instead of by sign. The forward
    /// values then stay on one linear piece of every ReLU. Meant for forward
    /// evaluation only; backward still masks by sign.
    pub fn with_relu_gates(gates: Vec<bool>) -> Self {
        Self { nodes: Vec::new(), gates: Some((gates, 0)) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Constant leaf; no gradient is propagated into it.
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Trainable leaf.
    pub fn param(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Result<Var> {
        let (xs, ws, bs) = (self.shape(x), self.shape(w), self.shape(b));
        if xs.len() != 4 || ws.len() != 4 || ws[2] != ws[3] {
            return shape_err(format!("conv2d expects [N,C,H,W] and [Co,Ci,k,k], got {xs:?}, {ws:?}"));
        }
        if xs[1] != ws[1] {
            return shape_err(format!(
                "conv2d input has {} channels but weight expects {}",
                xs[1], ws[1]
            ));
        }
        if bs != [ws[0]] {
            return shape_err(format!("conv2d bias {bs:?} does not match {} filters", ws[0]));
        }
        if !(1..=2).contains(&stride) {
            return shape_err(format!("conv2d stride {stride} not in {{1, 2}}"));
        }
        let (n, cout) = (xs[0], ws[0]);
        let geom = ConvGeometry::forward(xs[1], xs[2], xs[3], ws[2], stride, pad)?;
        let y = conv::conv2d_forward(
            &geom,
            n,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            cout,
        );
        let value = Tensor::from_vec(&[n, cout, geom.out_h, geom.out_w], y)?;
        let rg = self.needs(&[x, w, b]);
        Ok(self.push(value, Op::Conv2d { x, w, b, geom }, rg))
    }

    pub fn conv_transpose2d(
        &mut self,
        x: Var,
        w: Var,
        b: Var,
        stride: usize,
        pad: usize,
        output_pad: usize,
    ) -> Result<Var> {
        let (xs, ws, bs) = (self.shape(x), self.shape(w), self.shape(b));
        if xs.len() != 4 || ws.len() != 4 || ws[2] != ws[3] {
            return shape_err(format!(
                "conv_transpose2d expects [N,C,H,W] and [Ci,Co,k,k], got {xs:?}, {ws:?}"
            ));
        }
        if xs[1] != ws[0] {
            return shape_err(format!(
                "conv_transpose2d input has {} channels but weight expects {}",
                xs[1], ws[0]
            ));
        }
        if bs != [ws[1]] {
            return shape_err(format!("conv_transpose2d bias {bs:?} does not match {} filters", ws[1]));
        }
        if ws[2] % 2 == 0 {
            return shape_err(format!("kernel size {} must be odd", ws[2]));
        }
        let (n, cin, cout) = (xs[0], xs[1], ws[1]);
        let geom = ConvGeometry::transposed(cout, xs[2], xs[3], ws[2], stride, pad, output_pad)?;
        let y = conv::conv_transpose2d_forward(
            &geom,
            n,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            cin,
        );
        let value = Tensor::from_vec(&[n, cout, geom.height, geom.width], y)?;
        let rg = self.needs(&[x, w, b]);
        Ok(self.push(value, Op::ConvTranspose2d { x, w, b, geom }, rg))
    }

    /// Affine map `x·W + b` with `x: [N, Din]`, `W: [Din, Dout]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (self.shape(x), self.shape(w), self.shape(b));
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || bs != [ws[1]] {
            return shape_err(format!("dense extents disagree: x {xs:?}, W {ws:?}, b {bs:?}"));
        }
        let (n, din, dout) = (xs[0], xs[1], ws[1]);
        let bias = self.value(b).data();
        let mut y: Vec<T> = (0..n).flat_map(|_| bias.iter().copied()).collect();
        gemm(
            MatRef::new(self.value(x).data(), n, din),
            MatRef::new(self.value(w).data(), din, dout),
            T::one(),
            &mut y,
        );
        let value = Tensor::from_vec(&[n, dout], y)?;
        let rg = self.needs(&[x, w, b]);
        Ok(self.push(value, Op::Dense { x, w, b }, rg))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        match kind {
            Activation::Relu => self.relu(x),
            Activation::LogSigmoid => self.log_sigmoid(x),
        }
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = match &mut self.gates {
            Some((bits, at)) => {
                let src = self.nodes[x.0].value.clone();
                let n = src.len();
                assert!(*at + n <= bits.len(), "relu gate pattern exhausted");
                let mask = &bits[*at..*at + n];
                *at += n;
                let mut out = src;
                out.data_mut().iter_mut().zip(mask).for_each(|(v, &on)| if !on { *v = T::zero() });
                out
            }
            None => self.value(x).map(|v| v.max(T::zero())),
        };
        let rg = self.needs(&[x]);
        self.push(value, Op::Relu(x), rg)
    }

    /// Sign bits of every ReLU input, in evaluation order.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu(x) => Some(x),
                _ => None,
            })
            .flat_map(|x| self.value(x).data().iter().map(|&v| v > T::zero()))
            .collect()
    }

    /// `−log(1 + e^{−x})`, evaluated as `min(x, 0) − log1p(e^{−|x|})`.
    pub fn log_sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| -stable_softplus(-v));
        let rg = self.needs(&[x]);
        self.push(value, Op::LogSigmoid(x), rg)
    }

    pub fn concat_channels(&mut self, inputs: &[Var]) -> Result<Var> {
        let Some(&first) = inputs.first() else {
            return shape_err("concat of zero tensors");
        };
        let s0 = self.shape(first).to_vec();
        if s0.len() != 4 {
            return shape_err(format!("concat expects [N,C,H,W], got {s0:?}"));
        }
        let mut channels = 0;
        for &v in inputs {
            let s = self.shape(v);
            if s.len() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3] {
                return shape_err(format!("concat spatial/batch mismatch: {s:?} vs {s0:?}"));
            }
            channels += s[1];
        }
        let (n, plane) = (s0[0], s0[2] * s0[3]);
        let mut data = Vec::with_capacity(n * channels * plane);
        for i in 0..n {
            for &v in inputs {
                let c = self.shape(v)[1];
                data.extend_from_slice(&self.value(v).data()[i * c * plane..][..c * plane]);
            }
        }
        let value = Tensor::from_vec(&[n, channels, s0[2], s0[3]], data)?;
        let rg = self.needs(inputs);
        Ok(self.push(value, Op::Concat(inputs.to_vec()), rg))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return shape_err(format!("{what}: {:?} vs {:?}", self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let mut value = self.value(a).clone();
        value.data_mut().iter_mut().zip(self.value(b).data()).for_each(|(x, &y)| *x += y);
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let mut value = self.value(a).clone();
        value.data_mut().iter_mut().zip(self.value(b).data()).for_each(|(x, &y)| *x *= y);
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        let value = self.value(x).map(|v| v * factor);
        let rg = self.needs(&[x]);
        self.push(value, Op::Scale(x, factor), rg)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::Reshape(x), rg))
    }

    /// `[N, ...] → [N, prod(...)]`.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x);
        let n = s[0];
        let rest: usize = s[1..].iter().product();
        self.reshape(x, &[n, rest])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        let rg = self.needs(&[x]);
        self.push(value, Op::Sum(x), rg)
    }

    /// `[N, C, H, W] → [N, C]` spatial mean.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 4 {
            return shape_err(format!("global_avg_pool expects [N,C,H,W], got {s:?}"));
        }
        let plane = s[2] * s[3];
        let inv = T::one() / T::from_usize(plane).unwrap();
        let data = self.value(x).data().chunks(plane).map(|c| c.iter().copied().sum::<T>() * inv).collect();
        let value = Tensor::from_vec(&[s[0], s[1]], data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::GlobalAvgPool(x), rg))
    }

    /// `z = mu + exp(½·logvar) ⊙ eps`, with `eps` held constant.
    pub fn reparameterize(&mut self, mu: Var, logvar: Var, eps: Tensor<T>) -> Result<Var> {
        self.same_shape(mu, logvar, "reparameterize mu/logvar")?;
        if eps.shape() != self.shape(mu) {
            return shape_err(format!("reparameterize eps {:?} vs mu {:?}", eps.shape(), self.shape(mu)));
        }
        let half = T::of(0.5);
        let data = self
            .value(mu)
            .data()
            .iter()
            .zip(self.value(logvar).data())
            .zip(eps.data())
            .map(|((&m, &lv), &e)| m + (half * lv).exp() * e)
            .collect();
        let value = Tensor::from_vec(self.shape(mu), data)?;
        let rg = self.needs(&[mu, logvar]);
        Ok(self.push(value, Op::Reparameterize { mu, logvar, eps }, rg))
    }

    /// Batch-mean of `−½ Σ_j (1 + logvar_j − exp(logvar_j) − mu_j²)` over `[N, J]` inputs.
    pub fn gaussian_kl(&mut self, mu: Var, logvar: Var) -> Result<Var> {
        self.same_shape(mu, logvar, "gaussian_kl mu/logvar")?;
        if self.shape(mu).len() != 2 {
            return shape_err(format!("gaussian_kl expects [N, J], got {:?}", self.shape(mu)));
        }
        let n = T::from_usize(self.shape(mu)[0]).unwrap();
        let half = T::of(0.5);
        let total: T = self
            .value(mu)
            .data()
            .iter()
            .zip(self.value(logvar).data())
            .map(|(&m, &lv)| half * (lv.exp() + m * m - T::one() - lv))
            .sum();
        let rg = self.needs(&[mu, logvar]);
        Ok(self.push(Tensor::scalar(total / n), Op::GaussianKl { mu, logvar }, rg))
    }

    /// Bernoulli negative log-likelihood of `target` under `sigmoid(logits)`,
    /// summed over all non-batch axes and averaged over the leading axis.
    pub fn bernoulli_nll(&mut self, logits: Var, target: Tensor<T>) -> Result<Var> {
        if target.shape() != self.shape(logits) {
            return shape_err(format!(
                "bernoulli_nll target {:?} vs logits {:?}",
                target.shape(),
                self.shape(logits)
            ));
        }
        if target.data().iter().any(|&t| !(t >= T::zero() && t <= T::one())) {
            return Err(Error::InvalidArgument("target values must lie in [0, 1]".into()));
        }
        let n = T::from_usize(self.shape(logits)[0]).unwrap();
        let total: T = self
            .value(logits)
            .data()
            .iter()
            .zip(target.data())
            .map(|(&a, &t)| stable_softplus(a) - t * a)
            .sum();
        let rg = self.needs(&[logits]);
        Ok(self.push(Tensor::scalar(total / n), Op::BernoulliNll { logits, target }, rg))
    }

    /// Propagates d(loss)/d(node) from a scalar `loss` to every trainable leaf.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).len() != 1 {
            return shape_err(format!("backward needs a scalar loss, got {:?}", self.shape(loss)));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut out: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.shape(loss), T::one()));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                out[i] = Some(g);
                continue;
            }
            for (v, contribution) in self.node_backward(node, g)? {
                if self.nodes[v.0].requires_grad {
                    accumulate(&mut grads[v.0], contribution);
                }
            }
        }
        Ok(Gradients { grads: out })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn node_backward(&self, node: &Node<T>, g: Tensor<T>) -> Result<Vec<(Var, Tensor<T>)>> {
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { x, w, b, geom } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (n, cout) = (xv.shape()[0], wv.shape()[0]);
                let (dx, dw, db) =
                    conv::conv2d_backward(geom, n, xv.data(), wv.data(), g.data(), cout, self.wants(*x));
                if let Some(dx) = dx {
                    out.push((*x, Tensor::from_vec(xv.shape(), dx)?));
                }
                out.push((*w, Tensor::from_vec(wv.shape(), dw)?));
                out.push((*b, Tensor::from_vec(&[cout], db)?));
            }
            Op::ConvTranspose2d { x, w, b, geom } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (n, cin) = (xv.shape()[0], xv.shape()[1]);
                let (dx, dw, db) = conv::conv_transpose2d_backward(
                    geom,
                    n,
                    xv.data(),
                    wv.data(),
                    g.data(),
                    cin,
                    self.wants(*x),
                );
                if let Some(dx) = dx {
                    out.push((*x, Tensor::from_vec(xv.shape(), dx)?));
                }
                out.push((*w, Tensor::from_vec(wv.shape(), dw)?));
                out.push((*b, Tensor::from_vec(&[geom.channels], db)?));
            }
            Op::Dense { x, w, b } => {
                let xv = self.value(*x);
                let wv = self.value(*w);
                let (n, din, dout) = (xv.shape()[0], xv.shape()[1], wv.shape()[1]);
                let gm = MatRef::new(g.data(), n, dout);
                if self.wants(*x) {
                    let mut dx = vec![T::zero(); n * din];
                    gemm(gm, MatRef::new(wv.data(), din, dout).t(), T::zero(), &mut dx);
                    out.push((*x, Tensor::from_vec(&[n, din], dx)?));
                }
                let mut dw = vec![T::zero(); din * dout];
                gemm(MatRef::new(xv.data(), n, din).t(), gm, T::zero(), &mut dw);
                out.push((*w, Tensor::from_vec(&[din, dout], dw)?));
                let mut db = vec![T::zero(); dout];
                for row in g.data().chunks(dout) {
                    db.iter_mut().zip(row).for_each(|(a, &r)| *a += r);
                }
                out.push((*b, Tensor::from_vec(&[dout], db)?));
            }
            Op::Relu(x) => {
                let mut dx = g;
                // subgradient at exactly 0 is 0
                dx.data_mut()
                    .iter_mut()
                    .zip(self.value(*x).data())
                    .for_each(|(d, &v)| if v <= T::zero() { *d = T::zero() });
                out.push((*x, dx));
            }
            Op::LogSigmoid(x) => {
                let mut dx = g;
                dx.data_mut()
                    .iter_mut()
                    .zip(self.value(*x).data())
                    .for_each(|(d, &v)| *d *= sigmoid(-v));
                out.push((*x, dx));
            }
            Op::Concat(inputs) => {
                let s = g.shape().to_vec();
                let (n, total, plane) = (s[0], s[1], s[2] * s[3]);
                let mut offset = 0;
                for &v in inputs {
                    let c = self.shape(v)[1];
                    if self.wants(v) {
                        let mut part = Vec::with_capacity(n * c * plane);
                        for i in 0..n {
                            part.extend_from_slice(&g.data()[(i * total + offset) * plane..][..c * plane]);
                        }
                        out.push((v, Tensor::from_vec(self.shape(v), part)?));
                    }
                    offset += c;
                }
            }
            Op::Add(a, b) => {
                out.push((*a, g.clone()));
                out.push((*b, g));
            }
            Op::Mul(a, b) => {
                let mut da = g.clone();
                da.data_mut().iter_mut().zip(self.value(*b).data()).for_each(|(d, &v)| *d *= v);
                let mut db = g;
                db.data_mut().iter_mut().zip(self.value(*a).data()).for_each(|(d, &v)| *d *= v);
                out.push((*a, da));
                out.push((*b, db));
            }
            Op::Scale(x, f) => out.push((*x, g.map(|v| v * *f))),
            Op::Reshape(x) => out.push((*x, g.reshape(self.shape(*x))?)),
            Op::Sum(x) => out.push((*x, Tensor::full(self.shape(*x), g.item()))),
            Op::GlobalAvgPool(x) => {
                let s = self.shape(*x);
                let plane = s[2] * s[3];
                let inv = T::one() / T::from_usize(plane).unwrap();
                let data = g.data().iter().flat_map(|&v| std::iter::repeat_n(v * inv, plane)).collect();
                out.push((*x, Tensor::from_vec(s, data)?));
            }
            Op::Reparameterize { mu, logvar, eps } => {
                let half = T::of(0.5);
                let dlv = g
                    .data()
                    .iter()
                    .zip(self.value(*logvar).data())
                    .zip(eps.data())
                    .map(|((&d, &lv), &e)| d * e * half * (half * lv).exp())
                    .collect();
                out.push((*logvar, Tensor::from_vec(self.shape(*logvar), dlv)?));
                out.push((*mu, g));
            }
            Op::GaussianKl { mu, logvar } => {
                let scale = g.item() / T::from_usize(self.shape(*mu)[0]).unwrap();
                let half = T::of(0.5);
                out.push((*mu, self.value(*mu).map(|m| m * scale)));
                out.push((*logvar, self.value(*logvar).map(|lv| half * (lv.exp() - T::one()) * scale)));
            }
            Op::BernoulliNll { logits, target } => {
                let scale = g.item() / T::from_usize(self.shape(*logits)[0]).unwrap();
                let data = self
                    .value(*logits)
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(&a, &t)| (sigmoid(a) - t) * scale)
                    .collect();
                out.push((*logits, Tensor::from_vec(self.shape(*logits), data)?));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(shape, data.to_vec()).unwrap()
    }

    #[test]
    fn relu_grad_at_zero_is_zero() {
        let mut g = Graph::new();
        let x = g.param(t(&[3], &[-1.0, 0.0, 2.0]));
        let y = g.relu(x);
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 2.0]);
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn accumulates_through_shared_inputs() {
        let mut g = Graph::new();
        let x = g.param(t(&[1], &[3.0]));
        let y = g.add(x, x).unwrap();
        let loss = g.sum(y);
        assert_eq!(g.backward(loss).unwrap().get(x).unwrap().item(), 2.0);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut g = Graph::new();
        let x = g.param(t(&[2], &[1.0, 2.0]));
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn log_sigmoid_values_are_stable() {
        let mut g = Graph::new();
        let x = g.input(t(&[4], &[0.0, -50.0, 50.0, -800.0]));
        let y = g.log_sigmoid(x);
        let v = g.value(y).data();
        assert!((v[0] + std::f64::consts::LN_2).abs() < 1e-12);
        assert!((v[1] + 50.0).abs() < 1e-9);
        assert!(v[2] < 0.0 && v[2] > -1e-20);
        assert!(v[3].is_finite() && (v[3] + 800.0).abs() < 1e-9);
    }

    #[test]
    fn dense_bias_grad_counts_rows() {
        let mut g = Graph::new();
        let x = g.input(t(&[3, 2], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let w = g.param(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
        let b = g.param(t(&[2], &[0.5, -0.5]));
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[1.5, 1.5, 3.5, 3.5, 5.5, 5.5]);
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(b).unwrap().data(), &[3.0, 3.0]);
        assert!(grads.get(x).is_none(), "constant inputs receive no gradient");
    }

    #[test]
    fn dense_zero_weight_gives_bias_rows() {
        let mut g = Graph::new();
        let x = g.input(t(&[2, 3], &[1.0, -2.0, 3.0, 0.5, 0.1, 9.0]));
        let w = g.param(Tensor::zeros(&[3, 2]));
        let b = g.param(t(&[2], &[4.0, -1.0]));
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[4.0, -1.0, 4.0, -1.0]);
        let bad = g.param(Tensor::zeros(&[2, 2]));
        assert!(g.dense(x, bad, b).is_err());
    }

    #[test]
    fn concat_orders_channels_and_splits_grads() {
        let mut g = Graph::new();
        let a = g.param(Tensor::full(&[1, 2, 4, 4], 1.0));
        let b = g.param(Tensor::full(&[1, 2, 4, 4], 2.0));
        let c = g.concat_channels(&[a, b]).unwrap();
        assert_eq!(g.value(c).shape(), &[1, 4, 4, 4]);
        assert!(g.value(c).data()[..32].iter().all(|&v| v == 1.0));
        assert!(g.value(c).data()[32..].iter().all(|&v| v == 2.0));
        let single = g.concat_channels(&[a]).unwrap();
        assert_eq!(g.value(single), g.value(a));
        let bad = g.param(Tensor::zeros(&[1, 2, 3, 4]));
        assert!(g.concat_channels(&[a, bad]).is_err());
    }

    #[test]
    fn add_and_reshape_contracts() {
        let mut g = Graph::new();
        let a = g.param(t(&[2], &[1.0, 2.0]));
        let z = g.param(t(&[2], &[0.0, 0.0]));
        let s = g.add(a, z).unwrap();
        assert_eq!(g.value(s), g.value(a));
        let neg = g.scale(a, -1.0);
        let zero = g.add(a, neg).unwrap();
        assert_eq!(g.value(zero).data(), &[0.0, 0.0]);
        let other = g.param(t(&[1], &[1.0]));
        assert!(g.add(a, other).is_err());
        assert!(g.reshape(a, &[3]).is_err());
        let big = g.input(Tensor::zeros(&[1, 256, 12, 12]));
        let flat = g.flatten(big).unwrap();
        assert_eq!(g.value(flat).shape(), &[1, 36_864]);
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let mut g = Graph::<f32>::new();
        let x = g.input(Tensor::zeros(&[1, 2, 5, 5]));
        let w = g.param(Tensor::zeros(&[1, 3, 3, 3]));
        let b = g.param(Tensor::zeros(&[1]));
        let err = g.conv2d(x, w, b, 1, 1).unwrap_err().to_string();
        assert!(err.contains("channels"), "{err}");
        let w1 = g.param(Tensor::zeros(&[1, 2, 7, 7]));
        assert!(g.conv2d(x, w1, b, 1, 0).is_err(), "non-positive output extent");
    }
}
