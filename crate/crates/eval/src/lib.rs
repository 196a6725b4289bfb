//! Evaluation of generated image sets: spectral diversity, ROC/AUC,
//! stratified folds and the train-on-synthetic, test-on-real experiment.

pub mod classifier;
pub mod diversity;
pub mod eigen;
pub mod error;
pub mod features;
pub mod folds;
pub mod kernel;
pub mod report;
pub mod roc;
pub mod substitution;

pub use classifier::{classify, train_desk_classifier, ClassifierConfig, DeskClassifier};
pub use diversity::{
    image_diversity, relative_diversity, spectral_entropy, vendi_diversity, DiversityReport, KernelKind,
    RelativeDiversity,
};
pub use eigen::{jacobi_eigen, symmetric_eigenvalues, SymmetricEigen};
pub use error::{EvalError, Result};
pub use features::{feature_embed, patch_statistics, EncoderPatchExtractor, FeatureExtractor, PixelExtractor};
pub use folds::{stratified_kfold, training_indices};
pub use kernel::{cosine_kernel, KernelMatrix};
pub use report::{auc_table, diversity_lines};
pub use roc::{roc_auc, AucSummary, RocResult};
pub use substitution::{substitution_experiment, SubstitutionConfig, SubstitutionResult};
