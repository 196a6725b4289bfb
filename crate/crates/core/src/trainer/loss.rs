//! Negative ELBO: Bernoulli reconstruction term plus closed-form Gaussian KL.

use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::model::{Bound, LatentStats, TideVae};
use crate::rng::{sample_standard_normal, Rng};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Scalar loss nodes of one ELBO evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ElboNodes {
    pub total: Var,
    pub recon: Var,
    pub kl: Var,
}

/// Values of one ELBO evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElboValue<T> {
    pub total: T,
    pub recon: T,
    pub kl: T,
}

/// KL(N(mu, exp(logvar)) ‖ N(0, I)), summed over latent dims, averaged over the batch.
pub fn kl_term<T: Scalar>(stats: &LatentStats<T>) -> Result<T> {
    let mut g = Graph::new();
    let mu = g.input(stats.mu.clone());
    let lv = g.input(stats.logvar.clone());
    let kl = g.gaussian_kl(mu, lv)?;
    Ok(g.value(kl).item())
}

/// Bernoulli NLL of `target` under `sigmoid(pre_activations)`, summed over
/// pixels and channels, averaged over the batch.
pub fn reconstruction_loss<T: Scalar>(pre_activations: &Tensor<T>, target: &Tensor<T>) -> Result<T> {
    let mut g = Graph::new();
    let pre = g.input(pre_activations.clone());
    let nll = g.bernoulli_nll(pre, target.clone())?;
    Ok(g.value(nll).item())
}

/// Builds the loss on `g` with explicit noise draws, one tensor per Monte Carlo sample.
pub fn elbo_graph<T: Scalar>(
    model: &TideVae<T>,
    g: &mut Graph<T>,
    params: &Bound,
    batch: &Tensor<T>,
    eps: &[Tensor<T>],
) -> Result<ElboNodes> {
    if eps.is_empty() {
        return Err(Error::InvalidArgument("need at least one Monte Carlo sample".into()));
    }
    let x = g.input(batch.clone());
    let (mu, logvar) = model.encode_graph(g, params, x)?;
    let mut recon: Option<Var> = None;
    for e in eps {
        let z = g.reparameterize(mu, logvar, e.clone())?;
        let pre = model.decode_graph(g, params, z)?;
        let nll = g.bernoulli_nll(pre, batch.clone())?;
        recon = Some(match recon {
            Some(acc) => g.add(acc, nll)?,
            None => nll,
        });
    }
    let mut recon = recon.expect("non-empty");
    if eps.len() > 1 {
        recon = g.scale(recon, T::one() / T::from_usize(eps.len()).unwrap());
    }
    let kl = g.gaussian_kl(mu, logvar)?;
    let total = g.add(recon, kl)?;
    Ok(ElboNodes { total, recon, kl })
}

/// Draws `samples` noise tensors shaped `[N, latent_dim]`.
pub fn draw_eps<T: Scalar>(rng: &mut Rng, n: usize, latent_dim: usize, samples: usize) -> Vec<Tensor<T>> {
    (0..samples).map(|_| sample_standard_normal(rng, &[n, latent_dim])).collect()
}

/// Value of the negative ELBO on `batch` with `samples` Monte Carlo draws.
pub fn elbo_loss<T: Scalar>(
    model: &TideVae<T>,
    batch: &Tensor<T>,
    rng: &mut Rng,
    samples: usize,
) -> Result<ElboValue<T>> {
    let eps = draw_eps(rng, batch.shape()[0], model.config().latent_dim, samples);
    elbo_loss_with_eps(model, batch, &eps)
}

pub fn elbo_loss_with_eps<T: Scalar>(
    model: &TideVae<T>,
    batch: &Tensor<T>,
    eps: &[Tensor<T>],
) -> Result<ElboValue<T>> {
    let mut g = Graph::new();
    let p = model.params().bind(&mut g, false);
    let nodes = elbo_graph(model, &mut g, &p, batch, eps)?;
    Ok(ElboValue {
        total: g.value(nodes.total).item(),
        recon: g.value(nodes.recon).item(),
        kl: g.value(nodes.kl).item(),
    })
}
