//! Central finite-difference checks of reverse-mode gradients.

use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::model::{TideConfig, TideVae};
use crate::rng::{sample_standard_normal, Rng};
use crate::tensor::Tensor;
use crate::trainer::elbo_graph;

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub name: String,
    /// Largest `|a − n| / max(|a| + |n|, floor)` over the checked coordinates.
    pub max_rel_error: f64,
    pub coordinates: usize,
    /// Worst error per input tensor, in input order.
    pub per_input: Vec<f64>,
    /// Compared coordinates per input tensor.
    pub per_input_coordinates: Vec<usize>,
}

impl GradCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// Denominator floor so that coordinates whose true gradient is zero compare
/// by absolute difference.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(REL_FLOOR)
}

/// Which coordinates of each input tensor to perturb.
#[derive(Clone, Copy, Debug)]
pub enum Coordinates {
    All,
    /// The largest-magnitude gradient entry plus `extra` random entries whose
    /// magnitude is at least `1e-3` of that maximum.
    Sampled { extra: usize, seed: u64 },
}

fn pick(grad: &Tensor<f64>, how: Coordinates, salt: u64) -> Vec<usize> {
    match how {
        Coordinates::All => (0..grad.len()).collect(),
        Coordinates::Sampled { extra, seed } => {
            let d = grad.data();
            let (arg, max) = d
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, &v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            let mut out = vec![arg];
            let strong: Vec<usize> = (0..d.len()).filter(|&i| i != arg && d[i].abs() >= 1e-3 * max).collect();
            let mut rng = Rng::with_stream(seed, salt);
            for _ in 0..extra.min(strong.len()) {
                out.push(strong[rng.below(strong.len())]);
            }
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

/// Compares the gradient of the scalar built by `f` with respect to each of
/// `inputs` against central differences of step `h`.
///
/// With many ReLUs some unit almost always changes sign within `x ± h`, and
/// differences across that kink do not estimate the derivative at `x`. The
/// perturbed evaluations therefore keep every ReLU gate as it was at `x`: that
/// function agrees with the real one at `x`, has the same gradient there, and
/// is smooth along the probe.
pub fn check_gradients<F>(name: &str, inputs: &[Tensor<f64>], h: f64, how: Coordinates, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let gates = g.relu_pattern();
    let mut grads = g.backward(out)?;
    drop(g);
    let eval = |vals: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::with_relu_gates(gates.clone());
        let vars: Vec<Var> = vals.iter().map(|t| g.input(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item())
    };
    let mut per_input = vec![0.0f64; inputs.len()];
    let mut per_input_coordinates = vec![0usize; inputs.len()];
    let mut work = inputs.to_vec();
    for (ti, &v) in vars.iter().enumerate() {
        let grad = grads.take(v).unwrap_or_else(|| Tensor::zeros(inputs[ti].shape()));
        for i in pick(&grad, how, ti as u64) {
            let x0 = work[ti].data()[i];
            work[ti].data_mut()[i] = x0 + h;
            let up = eval(&work)?;
            work[ti].data_mut()[i] = x0 - h;
            let down = eval(&work)?;
            work[ti].data_mut()[i] = x0;
            let numeric = (up - down) / (2.0 * h);
            let err = relative_error(grad.data()[i], numeric);
            if !err.is_finite() {
                return Err(Error::InvalidArgument(format!("{name}: non-finite gradient at input {ti}[{i}]")));
            }
            per_input[ti] = per_input[ti].max(err);
            per_input_coordinates[ti] += 1;
        }
    }
    let max_rel_error = per_input.iter().copied().fold(0.0, f64::max);
    Ok(GradCheck {
        name: name.to_string(),
        max_rel_error,
        coordinates: per_input_coordinates.iter().sum(),
        per_input,
        per_input_coordinates,
    })
}

fn normal(rng: &mut Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    sample_standard_normal::<f64>(rng, shape).map(|v| v * scale)
}

/// Pushes values away from zero so kinks at 0 sit well outside `±h`.
fn away_from_zero(t: Tensor<f64>) -> Tensor<f64> {
    t.map(|v| if v.abs() < 0.05 { v.signum() * 0.05 + v } else { v })
}

fn uniform(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.uniform_range(lo, hi)).collect()).expect("shape")
}

/// Weighted sum `Σ r·y` with a fixed random `r`, so every output entry
/// contributes a distinct gradient.
fn probe(g: &mut Graph<f64>, y: Var, rng_seed: u64) -> Result<Var> {
    let shape = g.value(y).shape().to_vec();
    let r = normal(&mut Rng::new(rng_seed), &shape, 1.0);
    let r = g.input(r);
    let p = g.mul(y, r)?;
    Ok(g.sum(p))
}

/// Every differentiable primitive on small random inputs, all coordinates.
pub fn check_primitives(seed: u64, h: f64) -> Result<Vec<GradCheck>> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();
    let all = Coordinates::All;
    let ps = seed ^ 0x5eed;

    let x = normal(&mut rng, &[2, 3, 5, 5], 1.0);
    let w = normal(&mut rng, &[4, 3, 3, 3], 0.5);
    let b = normal(&mut rng, &[4], 0.5);
    for stride in [1, 2] {
        out.push(check_gradients(&format!("conv2d stride {stride}"), &[x.clone(), w.clone(), b.clone()], h, all, |g, v| {
            let y = g.conv2d(v[0], v[1], v[2], stride, 1)?;
            probe(g, y, ps)
        })?);
    }
    let x = normal(&mut rng, &[2, 3, 4, 4], 1.0);
    let w = normal(&mut rng, &[3, 2, 3, 3], 0.5);
    let b = normal(&mut rng, &[2], 0.5);
    out.push(check_gradients("conv_transpose2d stride 2", &[x, w, b], h, all, |g, v| {
        let y = g.conv_transpose2d(v[0], v[1], v[2], 2, 1, 1)?;
        probe(g, y, ps)
    })?);
    let x = normal(&mut rng, &[3, 5], 1.0);
    let w = normal(&mut rng, &[5, 4], 0.5);
    let b = normal(&mut rng, &[4], 0.5);
    out.push(check_gradients("dense", &[x, w, b], h, all, |g, v| {
        let y = g.dense(v[0], v[1], v[2])?;
        probe(g, y, ps)
    })?);
    let x = away_from_zero(normal(&mut rng, &[2, 3, 4], 1.0));
    out.push(check_gradients("relu", std::slice::from_ref(&x), h, all, |g, v| {
        let y = g.relu(v[0]);
        probe(g, y, ps)
    })?);
    out.push(check_gradients("log_sigmoid", &[normal(&mut rng, &[2, 3, 4], 3.0)], h, all, |g, v| {
        let y = g.log_sigmoid(v[0]);
        probe(g, y, ps)
    })?);
    let a = normal(&mut rng, &[2, 2, 3, 3], 1.0);
    let c = normal(&mut rng, &[2, 3, 3, 3], 1.0);
    out.push(check_gradients("concat_channels", &[a, c], h, all, |g, v| {
        let y = g.concat_channels(&[v[0], v[1]])?;
        probe(g, y, ps)
    })?);
    let a = normal(&mut rng, &[3, 4], 1.0);
    let c = normal(&mut rng, &[3, 4], 1.0);
    out.push(check_gradients("add", &[a.clone(), c.clone()], h, all, |g, v| {
        let y = g.add(v[0], v[1])?;
        probe(g, y, ps)
    })?);
    out.push(check_gradients("mul", &[a.clone(), c], h, all, |g, v| {
        let y = g.mul(v[0], v[1])?;
        probe(g, y, ps)
    })?);
    out.push(check_gradients("scale", std::slice::from_ref(&a), h, all, |g, v| {
        let y = g.scale(v[0], -1.7);
        probe(g, y, ps)
    })?);
    out.push(check_gradients("reshape", &[a], h, all, |g, v| {
        let y = g.reshape(v[0], &[2, 6])?;
        probe(g, y, ps)
    })?);
    let x = normal(&mut rng, &[2, 3, 3, 2], 1.0);
    out.push(check_gradients("flatten", std::slice::from_ref(&x), h, all, |g, v| {
        let y = g.flatten(v[0])?;
        probe(g, y, ps)
    })?);
    out.push(check_gradients("global_avg_pool", &[x], h, all, |g, v| {
        let y = g.global_avg_pool(v[0])?;
        probe(g, y, ps)
    })?);
    out.push(check_gradients("sum", &[normal(&mut rng, &[4, 3], 1.0)], h, all, |g, v| {
        let s = g.sum(v[0]);
        let s2 = g.mul(s, s)?;
        Ok(s2)
    })?);
    let mu = normal(&mut rng, &[3, 4], 1.0);
    let lv = normal(&mut rng, &[3, 4], 0.5);
    let eps = normal(&mut rng, &[3, 4], 1.0);
    out.push(check_gradients("reparameterize", &[mu.clone(), lv.clone()], h, all, |g, v| {
        let y = g.reparameterize(v[0], v[1], eps.clone())?;
        probe(g, y, ps)
    })?);
    out.push(check_gradients("gaussian_kl", &[mu, lv], h, all, |g, v| g.gaussian_kl(v[0], v[1]))?);
    let target = uniform(&mut rng, &[2, 3, 2, 2], 0.0, 1.0);
    out.push(check_gradients("bernoulli_nll", &[normal(&mut rng, &[2, 3, 2, 2], 2.0)], h, all, |g, v| {
        g.bernoulli_nll(v[0], target.clone())
    })?);
    Ok(out)
}

/// The full architecture at `size`² with every width cut to an eighth, so a
/// forward pass is cheap and has few ReLU units near a kink.
pub fn toy_config(size: usize) -> TideConfig {
    TideConfig {
        stem_filters: 4,
        msb_filters: [4, 8, 16, 32],
        pool_filters: [8, 16, 32],
        encoder_fc: 32,
        ..TideConfig::with_resolution(size)
    }
}

/// The full negative ELBO of a freshly initialized model on `n` random
/// images, checked on sampled coordinates of every parameter tensor.
/// Returns one entry per tensor, named after the parameter.
pub fn check_model(config: TideConfig, n: usize, seed: u64, h: f64, extra: usize) -> Result<Vec<GradCheck>> {
    let mut rng = Rng::new(seed);
    let model = TideVae::<f64>::new(config, &mut rng)?;
    let cfg = model.config().clone();
    let batch = uniform(&mut rng, &[n, cfg.channels, cfg.height(), cfg.width()], 0.02, 0.98);
    let eps = vec![sample_standard_normal::<f64>(&mut rng, &[n, cfg.latent_dim])];
    let params = model.params().tensors().to_vec();
    let loss = |g: &mut Graph<f64>, v: &[Var]| -> Result<Var> {
        let bound = crate::model::Bound::from_vars(v.to_vec());
        Ok(elbo_graph(&model, g, &bound, &batch, &eps)?.total)
    };
    let whole = check_gradients("tide loss", &params, h, Coordinates::Sampled { extra, seed }, loss)?;
    Ok(model
        .params()
        .names()
        .iter()
        .zip(whole.per_input.iter().zip(&whole.per_input_coordinates))
        .map(|(name, (&e, &c))| GradCheck {
            name: name.clone(),
            max_rel_error: e,
            coordinates: c,
            per_input: vec![e],
            per_input_coordinates: vec![c],
        })
        .collect())
}
