use tide_core::Rng;

use crate::error::{invalid, Result};

/// Partitions `0..labels.len()` into `k` folds with per-class balance.
///
/// Each class is shuffled with a generator seeded by `seed` and dealt
/// round-robin, starting where the previous class stopped so the fold sizes
/// also stay within one of each other. Indices inside a fold are ascending.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = Rng::new(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return invalid(format!("class {class} has {} samples, fewer than k = {k}", idx.len()));
        }
        rng.shuffle(&mut idx);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// All indices outside fold `held_out`.
pub fn training_indices(folds: &[Vec<usize>], held_out: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != held_out)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fold_is_everything() {
        let f = stratified_kfold(&[0, 1, 1, 0, 1], 1, 3).unwrap();
        assert_eq!(f, vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn small_class_rejected() {
        assert!(stratified_kfold(&[0, 0, 0, 1], 2, 0).is_err());
    }

    #[test]
    fn training_complement() {
        let folds = vec![vec![0, 3], vec![1], vec![2, 4]];
        assert_eq!(training_indices(&folds, 0), vec![1, 2, 4]);
    }
}
