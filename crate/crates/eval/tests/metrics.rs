use proptest::prelude::*;
use tide_core::Rng;
use tide_eval::*;

/// Random symmetric PSD matrix `B Bᵀ` of size `n`.
fn random_psd(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    let b: Vec<f64> = (0..n * n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
        }
    }
    a
}

fn reconstruct(e: &SymmetricEigen, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k]).sum();
        }
    }
    out
}

/// Roots of the characteristic cubic of a symmetric 3×3 matrix by the
/// trigonometric method, descending.
fn cubic_eigenvalues(a: &[f64]) -> Vec<f64> {
    let (a11, a12, a13, a22, a23, a33) = (a[0], a[1], a[2], a[4], a[5], a[8]);
    let q = (a11 + a22 + a33) / 3.0;
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = [
        (a11 - q) / p, a12 / p, a13 / p,
        a12 / p, (a22 - q) / p, a23 / p,
        a13 / p, a23 / p, (a33 - q) / p,
    ];
    let det = b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6]) + b[2] * (b[3] * b[7] - b[4] * b[6]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    vec![l1, 3.0 * q - l1 - l3, l3]
}

#[test]
fn psd_six_by_six_reconstructs() {
    for seed in 0..5 {
        let a = random_psd(6, seed);
        let scaled: Vec<f64> = a.iter().map(|x| x / 6.0).collect();
        let e = jacobi_eigen(&scaled, 6).unwrap();
        for (x, y) in reconstruct(&e, 6).iter().zip(&scaled) {
            assert!((x - y).abs() < 1e-8, "seed {seed}: {x} vs {y}");
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn three_by_three_matches_characteristic_roots() {
    for seed in 10..30 {
        let a = random_psd(3, seed);
        let e = jacobi_eigen(&a, 3).unwrap();
        for (x, y) in e.values.iter().zip(cubic_eigenvalues(&a)) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "seed {seed}: {x} vs {y}");
        }
    }
}

#[test]
fn cosine_examples() {
    let k = cosine_kernel(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    assert!((k.get(0, 1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    assert_eq!(cosine_kernel(&[vec![2.0, 3.0], vec![2.0, 3.0]]).unwrap().entries(), &[1.0; 4]);
    assert_eq!(cosine_kernel(&[vec![0.0, 3.0], vec![5.0, 0.0]]).unwrap().entries(), &[1.0, 0.0, 0.0, 1.0]);
    assert!(matches!(cosine_kernel(&[vec![1.0], vec![0.0]]), Err(EvalError::ZeroVector { index: 1 })));
}

#[test]
fn relative_diversity_of_duplicates_is_inverse() {
    let real: Vec<_> = (0..4)
        .map(|i| {
            let mut t = tide_core::Tensor::zeros(&[3, 2, 2]);
            t.data_mut()[i] = 1.0;
            t
        })
        .collect();
    let dup = vec![real[0].clone(); 4];
    let r = relative_diversity(&dup, &real, KernelKind::Pixel, None).unwrap();
    assert!((r.real.delta - 4.0).abs() < 1e-9);
    assert!((r.ratio - 0.25).abs() < 1e-9);
    assert_eq!(relative_diversity(&real, &real, KernelKind::Pixel, None).unwrap().ratio, 1.0);
    assert!(relative_diversity(&[], &real, KernelKind::Pixel, None).is_err());
}

/// Positive/negative pairs ordered correctly, ties counted one half.
fn mann_whitney(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

#[test]
fn auc_pair_counting_example() {
    let r = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
    assert_eq!(r.auc, 0.75);
    assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
    assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
    assert!(roc_auc(&[0.2, 0.3], &[1, 1]).is_err());
}

#[test]
fn ten_folds_of_728_and_227() {
    let labels: Vec<u8> = [vec![0u8; 728], vec![1u8; 227]].concat();
    let folds = stratified_kfold(&labels, 10, 42).unwrap();
    let mut seen = vec![false; labels.len()];
    for f in &folds {
        let abn = f.iter().filter(|&&i| labels[i] == 1).count();
        let nrm = f.len() - abn;
        assert!((72..=73).contains(&nrm) && (22..=23).contains(&abn), "{nrm} / {abn}");
        for &i in f {
            assert!(!seen[i]);
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s));
}

fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    // scores drawn from a small grid so ties are frequent
    (2usize..40).prop_flat_map(|n| {
        (prop::collection::vec(0u8..12, n), prop::collection::vec(0u8..2, n)).prop_filter_map("both classes", |(s, mut l)| {
            if l.iter().all(|&x| x == l[0]) {
                l[0] ^= 1;
            }
            Some((s.into_iter().map(|v| v as f64 / 11.0).collect(), l))
        })
    })
}

fn vectors(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_n, 1usize..6).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(0.05f64..1.0, d), n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn auc_equals_mann_whitney((s, l) in scores_and_labels()) {
        let auc = roc_auc(&s, &l).unwrap().auc;
        prop_assert!((auc - mann_whitney(&s, &l)).abs() <= 1e-12);
    }

    #[test]
    fn auc_flip_and_monotone((s, l) in scores_and_labels()) {
        let auc = roc_auc(&s, &l).unwrap().auc;
        let flipped: Vec<u8> = l.iter().map(|x| 1 - x).collect();
        prop_assert!((auc - (1.0 - roc_auc(&s, &flipped).unwrap().auc)).abs() <= 1e-12);
        let warped: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
        prop_assert_eq!(auc, roc_auc(&warped, &l).unwrap().auc);
    }

    #[test]
    fn roc_curve_is_monotone((s, l) in scores_and_labels()) {
        let r = roc_auc(&s, &l).unwrap();
        prop_assert!(r.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        prop_assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn folds_partition_and_balance(n0 in 1usize..60, n1 in 1usize..60, k in 1usize..8, seed in any::<u64>()) {
        prop_assume!(n0 >= k && n1 >= k);
        let mut labels = vec![0u8; n0];
        labels.extend(vec![1u8; n1]);
        let mut rng = Rng::new(seed);
        rng.shuffle(&mut labels);
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n0 + n1).collect::<Vec<_>>());
        for class in [0u8, 1] {
            let total = if class == 0 { n0 } else { n1 } as f64;
            for f in &folds {
                let c = f.iter().filter(|&&i| labels[i] == class).count() as f64;
                prop_assert!((c - total / k as f64).abs() < 1.0);
            }
        }
        prop_assert_eq!(stratified_kfold(&labels, k, seed).unwrap(), folds);
    }

    #[test]
    fn jacobi_trace_and_frobenius(n in 1usize..8, seed in any::<u64>()) {
        let a = random_psd(n, seed);
        let e = jacobi_eigen(&a, n).unwrap();
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-8 * (1.0 + trace));
        let efro = e.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((efro - fro).abs() < 1e-8 * (1.0 + fro));
    }

    #[test]
    fn vendi_bounds_and_permutation(v in vectors(8), seed in any::<u64>()) {
        let n = v.len();
        let d = vendi_diversity(&cosine_kernel(&v).unwrap(), KernelKind::Pixel).unwrap();
        prop_assert!(d.delta >= 1.0 - 1e-9 && d.delta <= n as f64 + 1e-9);
        prop_assert!((d.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let mut shuffled = v.clone();
        Rng::new(seed).shuffle(&mut shuffled);
        let p = vendi_diversity(&cosine_kernel(&shuffled).unwrap(), KernelKind::Pixel).unwrap();
        prop_assert!((d.delta - p.delta).abs() < 1e-9);
    }

    #[test]
    fn vendi_duplication_invariant(v in vectors(6)) {
        let d = vendi_diversity(&cosine_kernel(&v).unwrap(), KernelKind::Pixel).unwrap();
        let doubled: Vec<Vec<f64>> = v.iter().chain(v.iter()).cloned().collect();
        let dd = vendi_diversity(&cosine_kernel(&doubled).unwrap(), KernelKind::Pixel).unwrap();
        prop_assert!((d.delta - dd.delta).abs() < 1e-6);
    }
}
