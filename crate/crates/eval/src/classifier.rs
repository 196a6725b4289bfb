//! Compact CNN used as the downstream abnormality classifier.

use serde::{Deserialize, Serialize};
use tide_core::model::{ConvParams, ParamStore};
use tide_core::trainer::{AdamConfig, AdamState};
use tide_core::{Graph, Rng, Tensor, Var};
use tide_data::LabeledDataset;

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { epochs: 30, batch_size: 16, learning_rate: 1e-3, seed: 0 }
    }
}

/// conv(8, 3×3) → conv(16, stride 2) → conv(32, stride 2) → global average
/// pool → dense(1) logit, ReLU after each convolution.
#[derive(Clone, Debug)]
pub struct DeskClassifier {
    params: ParamStore<f32>,
    stem: ConvParams,
    down1: ConvParams,
    down2: ConvParams,
    head: ConvParams,
    /// Epoch-mean training loss.
    pub loss_history: Vec<f64>,
}

impl DeskClassifier {
    pub fn new(channels: usize, rng: &mut Rng) -> Self {
        let mut params = ParamStore::new();
        let stem = ConvParams::conv(&mut params, "stem", channels, 8, 3, rng);
        let down1 = ConvParams::conv(&mut params, "down1", 8, 16, 3, rng);
        let down2 = ConvParams::conv(&mut params, "down2", 16, 32, 3, rng);
        let head = ConvParams::dense(&mut params, "head", 32, 1, rng);
        Self { params, stem, down1, down2, head, loss_history: Vec::new() }
    }

    pub fn params(&self) -> &ParamStore<f32> {
        &self.params
    }

    fn logits_graph(&self, g: &mut Graph<f32>, trainable: bool, x: Tensor<f32>) -> Result<(Var, Vec<Var>)> {
        let p = self.params.bind(g, trainable);
        let x = g.input(x);
        let h = self.stem.apply_conv(g, &p, x, 1)?;
        let h = self.down1.apply_conv(g, &p, h, 2)?;
        let h = self.down2.apply_conv(g, &p, h, 2)?;
        let h = g.global_avg_pool(h)?;
        let logit = g.dense(h, p.var(self.head.weight), p.var(self.head.bias))?;
        Ok((logit, p.vars().to_vec()))
    }

    /// One logit per image of `[N, C, H, W]`.
    pub fn logits(&self, images: &Tensor<f32>) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let (logit, _) = self.logits_graph(&mut g, false, images.clone())?;
        Ok(g.value(logit).data().iter().map(|&v| v as f64).collect())
    }
}

fn batch_of(data: &LabeledDataset, idx: &[usize]) -> Result<(Tensor<f32>, Tensor<f32>)> {
    let refs: Vec<&Tensor<f32>> = idx.iter().map(|&i| &data.images()[i]).collect();
    let x = Tensor::stack(&refs)?;
    let y = Tensor::from_vec(&[idx.len(), 1], idx.iter().map(|&i| data.labels()[i] as f32).collect())?;
    Ok((x, y))
}

/// Trains with Adam on the stable binary cross-entropy of the logits.
pub fn train_desk_classifier(data: &LabeledDataset, cfg: &ClassifierConfig) -> Result<DeskClassifier> {
    if data.count(0) == 0 || data.count(1) == 0 {
        return invalid("classifier training set must contain both classes");
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return invalid(format!("invalid classifier config {cfg:?}"));
    }
    let mut rng = Rng::new(cfg.seed);
    let channels = data.images()[0].shape()[0];
    let mut clf = DeskClassifier::new(channels, &mut rng);
    let adam_cfg = AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() };
    let mut adam = AdamState::new(clf.params.tensors());
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let (x, y) = batch_of(data, idx)?;
            let mut g = Graph::new();
            let (logit, vars) = clf.logits_graph(&mut g, true, x)?;
            let loss = g.bernoulli_nll(logit, y)?;
            total += g.value(loss).item() as f64 * idx.len() as f64;
            let mut grads = g.backward(loss)?;
            let grads: Vec<Tensor<f32>> = vars
                .iter()
                .zip(clf.params.tensors())
                .map(|(&v, p)| grads.take(v).unwrap_or_else(|| Tensor::zeros(p.shape())))
                .collect();
            adam.step(clf.params.tensors_mut(), &grads, &adam_cfg)?;
        }
        clf.loss_history.push(total / data.len() as f64);
    }
    Ok(clf)
}

/// `sigmoid(logit)` per image, in `[0, 1]`.
pub fn classify(clf: &DeskClassifier, images: &[Tensor<f32>]) -> Result<Vec<f64>> {
    let mut scores = Vec::with_capacity(images.len());
    for chunk in images.chunks(64) {
        let refs: Vec<&Tensor<f32>> = chunk.iter().collect();
        let logits = clf.logits(&Tensor::stack(&refs)?)?;
        scores.extend(logits.iter().map(|&l| 1.0 / (1.0 + (-l).exp())));
    }
    Ok(scores)
}
