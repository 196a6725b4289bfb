//! Convolution kernels against direct nested-loop definitions.

use proptest::prelude::*;
use tide_core::{sample_standard_normal, Graph, Rng, Tensor};

/// y[n,o,i,j] = b[o] + Σ_c Σ_u Σ_v x[n,c,i·s+u−p, j·s+v−p] · w[o,c,u,v]
fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, s: usize, p: usize) -> Tensor<f64> {
    let [n, c, h, wd] = x.shape().try_into().unwrap();
    let [o, _, k, _] = w.shape().try_into().unwrap();
    let oh = (h + 2 * p - k) / s + 1;
    let ow = (wd + 2 * p - k) / s + 1;
    let mut y = vec![0.0; n * o * oh * ow];
    for ni in 0..n {
        for oi in 0..o {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = b.data()[oi];
                    for ci in 0..c {
                        for u in 0..k {
                            for v in 0..k {
                                let (yy, xx) = ((i * s + u) as isize - p as isize, (j * s + v) as isize - p as isize);
                                if yy < 0 || xx < 0 || yy >= h as isize || xx >= wd as isize {
                                    continue;
                                }
                                acc += x.data()[((ni * c + ci) * h + yy as usize) * wd + xx as usize]
                                    * w.data()[((oi * c + ci) * k + u) * k + v];
                            }
                        }
                    }
                    y[((ni * o + oi) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    Tensor::from_vec(&[n, o, oh, ow], y).unwrap()
}

/// Scatter form: every input pixel adds `x · w` into a stride-spaced window.
fn naive_conv_transpose(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, s: usize, p: usize, op: usize) -> Tensor<f64> {
    let [n, ci, h, wd] = x.shape().try_into().unwrap();
    let [_, co, k, _] = w.shape().try_into().unwrap();
    let oh = (h - 1) * s + k + op - 2 * p;
    let ow = (wd - 1) * s + k + op - 2 * p;
    let mut y = vec![0.0; n * co * oh * ow];
    for ni in 0..n {
        for o in 0..co {
            for i in 0..oh * ow {
                y[(ni * co + o) * oh * ow + i] = b.data()[o];
            }
        }
        for c in 0..ci {
            for i in 0..h {
                for j in 0..wd {
                    let xv = x.data()[((ni * ci + c) * h + i) * wd + j];
                    for o in 0..co {
                        for u in 0..k {
                            for v in 0..k {
                                let yy = (i * s + u) as isize - p as isize;
                                let xx = (j * s + v) as isize - p as isize;
                                if yy < 0 || xx < 0 || yy >= oh as isize || xx >= ow as isize {
                                    continue;
                                }
                                y[((ni * co + o) * oh + yy as usize) * ow + xx as usize] +=
                                    xv * w.data()[((c * co + o) * k + u) * k + v];
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[n, co, oh, ow], y).unwrap()
}

fn conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, s: usize, p: usize) -> Tensor<f64> {
    let mut g = Graph::new();
    let (xv, wv, bv) = (g.input(x.clone()), g.input(w.clone()), g.input(b.clone()));
    let y = g.conv2d(xv, wv, bv, s, p).unwrap();
    g.value(y).clone()
}

fn conv_t(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, s: usize, p: usize, op: usize) -> Tensor<f64> {
    let mut g = Graph::new();
    let (xv, wv, bv) = (g.input(x.clone()), g.input(w.clone()), g.input(b.clone()));
    let y = g.conv_transpose2d(xv, wv, bv, s, p, op).unwrap();
    g.value(y).clone()
}

#[test]
fn strided_conv_matches_direct_sum() {
    let mut rng = Rng::new(11);
    let x = sample_standard_normal::<f64>(&mut rng, &[1, 2, 5, 5]);
    let w = sample_standard_normal::<f64>(&mut rng, &[4, 2, 3, 3]);
    let b = sample_standard_normal::<f64>(&mut rng, &[4]);
    let got = conv(&x, &w, &b, 2, 1);
    let want = naive_conv(&x, &w, &b, 2, 1);
    assert_eq!(got.shape(), &[1, 4, 3, 3]);
    assert!(got.max_abs_diff(&want) < 1e-6);
}

#[test]
fn decoder_upsampling_doubles_extent() {
    let x = Tensor::<f64>::ones(&[1, 2, 4, 4]);
    let w = Tensor::<f64>::ones(&[2, 3, 3, 3]);
    let b = Tensor::<f64>::zeros(&[3]);
    assert_eq!(conv_t(&x, &w, &b, 2, 1, 1).shape(), &[1, 3, 8, 8]);
}

fn shapes() -> impl Strategy<Value = (usize, usize, usize, usize, usize, usize, usize)> {
    // (n, cin, cout, h, w, k index, stride)
    (1usize..3, 1usize..4, 1usize..4, 1usize..8, 1usize..8, 0usize..4, 1usize..3)
        .prop_map(|(n, ci, co, h, w, ki, s)| (n, ci, co, h, w, [1, 3, 5, 7][ki], s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_matches_direct_sum_for_random_geometry((n, ci, co, h, w, k, s) in shapes(), seed in any::<u64>()) {
        let p = (k - 1) / 2;
        prop_assume!(h + 2 * p >= k && w + 2 * p >= k);
        let mut rng = Rng::new(seed);
        let x = sample_standard_normal::<f64>(&mut rng, &[n, ci, h, w]);
        let wt = sample_standard_normal::<f64>(&mut rng, &[co, ci, k, k]);
        let b = sample_standard_normal::<f64>(&mut rng, &[co]);
        prop_assert!(conv(&x, &wt, &b, s, p).max_abs_diff(&naive_conv(&x, &wt, &b, s, p)) < 1e-9);
    }

    #[test]
    fn transposed_conv_matches_scatter((n, ci, co, h, w, k, s) in shapes(), seed in any::<u64>(), op_raw in 0usize..2) {
        let p = (k - 1) / 2;
        let op = op_raw.min(s - 1);
        let mut rng = Rng::new(seed);
        let x = sample_standard_normal::<f64>(&mut rng, &[n, ci, h, w]);
        let wt = sample_standard_normal::<f64>(&mut rng, &[ci, co, k, k]);
        let b = sample_standard_normal::<f64>(&mut rng, &[co]);
        let got = conv_t(&x, &wt, &b, s, p, op);
        let want = naive_conv_transpose(&x, &wt, &b, s, p, op);
        prop_assert_eq!(got.shape(), want.shape());
        prop_assert!(got.max_abs_diff(&want) < 1e-9);
    }

    /// ⟨T x, y⟩ = ⟨x, C y⟩ where C is the convolution sharing T's weights.
    #[test]
    fn transposed_conv_is_adjoint_of_conv((n, a, bch, h, w, k, s) in shapes(), seed in any::<u64>(), op_raw in 0usize..2) {
        let p = (k - 1) / 2;
        let op = op_raw.min(s - 1);
        let mut rng = Rng::new(seed);
        let x = sample_standard_normal::<f64>(&mut rng, &[n, a, h, w]);
        let wt = sample_standard_normal::<f64>(&mut rng, &[a, bch, k, k]);
        let tx = conv_t(&x, &wt, &Tensor::zeros(&[bch]), s, p, op);
        let y = sample_standard_normal::<f64>(&mut rng, tx.shape());
        let cy = conv(&y, &wt, &Tensor::zeros(&[a]), s, p);
        prop_assert_eq!(cy.shape(), x.shape());
        let lhs: f64 = tx.data().iter().zip(y.data()).map(|(p, q)| p * q).sum();
        let rhs: f64 = x.data().iter().zip(cy.data()).map(|(p, q)| p * q).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }
}
