use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RocResult {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per distinct score.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC curve and trapezoid AUC for binary `labels` (1 = positive).
///
/// Tied scores form one threshold step, so the AUC counts each tied
/// positive/negative pair as one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocResult> {
    if scores.len() != labels.len() {
        return invalid(format!("{} scores but {} labels", scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return invalid(format!("score {i} is NaN"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.iter().filter(|&&l| l == 0).count();
    if pos + neg != labels.len() {
        return invalid("labels must be 0 or 1");
    }
    if pos == 0 || neg == 0 {
        return invalid("ROC needs both classes present");
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // trapezoid in count units, normalized once at the end
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocResult { points, auc: auc / (pos * neg) as f64 })
}

/// Mean and sample standard deviation of per-fold AUCs.
#[derive(Clone, Debug, PartialEq)]
pub struct AucSummary {
    pub aucs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl AucSummary {
    pub fn from_aucs(aucs: Vec<f64>) -> Self {
        let n = aucs.len() as f64;
        let mean = aucs.iter().sum::<f64>() / n;
        let std = if aucs.len() > 1 {
            (aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { aucs, mean, std }
    }
}
