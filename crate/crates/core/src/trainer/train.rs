use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::graph::Graph;
use crate::model::TideVae;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::trainer::adam::{AdamConfig, AdamState};
use crate::trainer::loss::{draw_eps, elbo_graph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Monte Carlo samples of the latent per example and step.
    pub mc_samples: usize,
    /// Epochs without sufficient improvement before stopping.
    pub early_stop_patience: usize,
    /// Required relative decrease of the epoch-mean loss to reset patience.
    pub early_stop_min_rel_improvement: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 5000,
            batch_size: 128,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            mc_samples: 1,
            early_stop_patience: 100,
            early_stop_min_rel_improvement: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.mc_samples == 0 {
            return Err(Error::Config("max_epochs, batch_size and mc_samples must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate {} must be > 0", self.learning_rate)));
        }
        if self.early_stop_patience == 0 {
            return Err(Error::Config("early_stop_patience must be >= 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Epoch-mean loss terms; `total == recon + kl`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

impl EpochRecord {
    /// One JSON object per line.
    pub fn log_line(&self) -> String {
        serde_json::to_string(self).expect("plain numbers serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    MaxEpochs,
    EarlyStopped,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
    pub wall_clock: Duration,
}

impl TrainReport {
    /// Running minimum of the epoch totals.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.epochs
            .iter()
            .map(|e| {
                best = best.min(e.total);
                best
            })
            .collect()
    }
}

fn gather_batch<T: Scalar>(images: &Tensor<T>, idx: &[usize]) -> Tensor<T> {
    let per: usize = images.shape()[1..].iter().product();
    let mut data = Vec::with_capacity(per * idx.len());
    for &i in idx {
        data.extend_from_slice(&images.data()[i * per..(i + 1) * per]);
    }
    let mut shape = images.shape().to_vec();
    shape[0] = idx.len();
    Tensor::from_vec(&shape, data).expect("gathered batch")
}

/// Fits `model` to `images` (`[N, C, H, W]`, values in `[0, 1]`).
///
/// Batches are drawn from a seeded shuffle each epoch, the last partial batch
/// included. The parameters of the best epoch are restored on return.
pub fn train<T: Scalar>(
    mut model: TideVae<T>,
    images: &Tensor<T>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(TideVae<T>, TrainReport)> {
    cfg.validate()?;
    let c = model.config();
    let s = images.shape();
    if s.len() != 4 || s[1] != c.channels || s[2] != c.height() || s[3] != c.width() {
        return shape_err(format!(
            "training images {s:?} do not match model input [N, {}, {}, {}]",
            c.channels,
            c.height(),
            c.width()
        ));
    }
    let n = s[0];
    if n == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let latent = c.latent_dim;
    let start = Instant::now();
    let adam_cfg = cfg.adam();
    let mut adam = AdamState::new(model.params().tensors());
    let mut rng = Rng::new(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs = Vec::new();
    let mut best_total = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_params = model.params().tensors().to_vec();
    let mut stale = 0;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        rng.shuffle(&mut order);
        let (mut recon_sum, mut kl_sum) = (0.0f64, 0.0f64);
        for idx in order.chunks(cfg.batch_size) {
            let batch = gather_batch(images, idx);
            let eps = draw_eps(&mut rng, idx.len(), latent, cfg.mc_samples);
            let mut g = Graph::new();
            let bound = model.params().bind(&mut g, true);
            let nodes = elbo_graph(&model, &mut g, &bound, &batch, &eps)?;
            let recon = g.value(nodes.recon).item().to_f64_lossy();
            let kl = g.value(nodes.kl).item().to_f64_lossy();
            if !recon.is_finite() || !kl.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("non-finite loss (recon {recon}, kl {kl})"),
                });
            }
            let mut grads = g.backward(nodes.total)?;
            let grads: Vec<Tensor<T>> = bound
                .vars()
                .iter()
                .zip(model.params().tensors())
                .map(|(&v, p)| grads.take(v).unwrap_or_else(|| Tensor::zeros(p.shape())))
                .collect();
            drop(g);
            adam.step(model.params_mut().tensors_mut(), &grads, &adam_cfg)?;
            recon_sum += recon * idx.len() as f64;
            kl_sum += kl * idx.len() as f64;
        }
        let recon = recon_sum / n as f64;
        let kl = kl_sum / n as f64;
        let record = EpochRecord { epoch, total: recon + kl, recon, kl };
        on_epoch(&record);
        epochs.push(record);

        let improved = best_total.is_infinite()
            || record.total < best_total - cfg.early_stop_min_rel_improvement * best_total.abs();
        if record.total < best_total {
            best_total = record.total;
            best_epoch = epoch;
            best_params.clone_from_slice(model.params().tensors());
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                stop_reason = StopReason::EarlyStopped;
                break;
            }
        }
    }
    model.params_mut().tensors_mut().clone_from_slice(&best_params);
    let report = TrainReport { epochs, best_epoch, stop_reason, wall_clock: start.elapsed() };
    Ok((model, report))
}
