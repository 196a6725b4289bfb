//! Train on synthetic images, test on real ones.

use serde::{Deserialize, Serialize};
use tide_core::{Rng, TideVae};
use tide_data::{LabeledDataset, ABNORMAL, NORMAL};

use crate::classifier::{classify, train_desk_classifier, ClassifierConfig};
use crate::error::{invalid, Result};
use crate::folds::{stratified_kfold, training_indices};
use crate::roc::{roc_auc, AucSummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubstitutionConfig {
    pub k: usize,
    pub repetitions: usize,
    /// Synthetic images drawn per repetition from each generator.
    pub n_normal: usize,
    pub n_abnormal: usize,
    pub seed: u64,
    pub classifier: ClassifierConfig,
}

impl Default for SubstitutionConfig {
    fn default() -> Self {
        Self { k: 10, repetitions: 10, n_normal: 728, n_abnormal: 227, seed: 0, classifier: ClassifierConfig::default() }
    }
}

/// AUCs on the same real test folds, ordered by repetition then fold.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstitutionResult {
    pub real_trained: AucSummary,
    pub synthetic_trained: AucSummary,
}

fn generate_class(model: &TideVae<f32>, n: usize, label: u8, rng: &mut Rng) -> Result<LabeledDataset> {
    let mut images = Vec::with_capacity(n);
    let mut left = n;
    while left > 0 {
        let take = left.min(32);
        images.extend(model.generate(rng, take)?.unstack());
        left -= take;
    }
    let paths = (0..n).map(|i| format!("synthetic-{label}-{i:04}")).collect();
    Ok(LabeledDataset::new(images, vec![label; n], paths)?)
}

fn check_generator(model: &TideVae<f32>, real: &LabeledDataset, which: &str) -> Result<()> {
    let c = model.config();
    let want = real.images()[0].shape();
    if [c.channels, c.height(), c.width()] != want {
        return invalid(format!(
            "{which} generator emits [{}, {}, {}] but real images are {want:?}",
            c.channels,
            c.height(),
            c.width()
        ));
    }
    Ok(())
}

fn fold_auc(train: &LabeledDataset, test: &LabeledDataset, cfg: &ClassifierConfig) -> Result<f64> {
    let clf = train_desk_classifier(train, cfg)?;
    Ok(roc_auc(&classify(&clf, test.images())?, test.labels())?.auc)
}

/// For each repetition: draw a synthetic set, fold both sets, and for every
/// fold index train one classifier on the other synthetic folds and one on the
/// other real folds, both scored on the same real fold.
pub fn substitution_experiment(
    real: &LabeledDataset,
    normal_generator: &TideVae<f32>,
    abnormal_generator: &TideVae<f32>,
    cfg: &SubstitutionConfig,
) -> Result<SubstitutionResult> {
    if real.is_empty() {
        return invalid("empty real dataset");
    }
    if cfg.k < 2 || cfg.repetitions == 0 {
        return invalid(format!("need k ≥ 2 and at least one repetition, got k = {} and {}", cfg.k, cfg.repetitions));
    }
    if cfg.n_normal < cfg.k || cfg.n_abnormal < cfg.k {
        return invalid(format!(
            "synthetic counts ({}, {}) must each be at least k = {}",
            cfg.n_normal, cfg.n_abnormal, cfg.k
        ));
    }
    check_generator(normal_generator, real, "normal")?;
    check_generator(abnormal_generator, real, "abnormal")?;

    let mut root = Rng::new(cfg.seed);
    let (mut real_aucs, mut syn_aucs) = (Vec::new(), Vec::new());
    for _ in 0..cfg.repetitions {
        let mut rep = root.fork();
        let synthetic = generate_class(normal_generator, cfg.n_normal, NORMAL, &mut rep)?
            .concat(&generate_class(abnormal_generator, cfg.n_abnormal, ABNORMAL, &mut rep)?)?;
        let real_folds = stratified_kfold(real.labels(), cfg.k, rep.next_u64())?;
        let syn_folds = stratified_kfold(synthetic.labels(), cfg.k, rep.next_u64())?;
        for i in 0..cfg.k {
            let clf_cfg = ClassifierConfig { seed: rep.next_u64(), ..cfg.classifier.clone() };
            let test = real.subset(&real_folds[i]);
            let real_train = real.subset(&training_indices(&real_folds, i));
            let syn_train = synthetic.subset(&training_indices(&syn_folds, i));
            real_aucs.push(fold_auc(&real_train, &test, &clf_cfg)?);
            syn_aucs.push(fold_auc(&syn_train, &test, &clf_cfg)?);
        }
    }
    Ok(SubstitutionResult {
        real_trained: AucSummary::from_aucs(real_aucs),
        synthetic_trained: AucSummary::from_aucs(syn_aucs),
    })
}

