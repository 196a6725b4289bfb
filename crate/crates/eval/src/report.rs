use std::fmt::Write as _;

use crate::diversity::RelativeDiversity;
use crate::substitution::SubstitutionResult;

/// Plain-text AUC table in percent, mean ± std.
pub fn auc_table(result: &SubstitutionResult, dataset: &str) -> String {
    let mut out = String::new();
    let folds = result.real_trained.aucs.len();
    let _ = writeln!(out, "AUC (%) on real test folds, {folds} folds x repetitions");
    let _ = writeln!(out, "{:<12} {:>18} {:>18}", "dataset", "real-trained", "synthetic-trained");
    let _ = writeln!(
        out,
        "{:<12} {:>18} {:>18}",
        dataset,
        format!("{:.1} ± {:.1}", 100.0 * result.real_trained.mean, 100.0 * result.real_trained.std),
        format!("{:.1} ± {:.1}", 100.0 * result.synthetic_trained.mean, 100.0 * result.synthetic_trained.std),
    );
    out
}

pub fn diversity_lines(d: &RelativeDiversity) -> String {
    format!(
        "kernel {}: delta_r = {:.6}, delta_g = {:.6}, relative = {:.6}\n",
        d.real.kernel, d.real.delta, d.generated.delta, d.ratio
    )
}
