//! The 2-conv / 2-fc block scheme on a 12x12 input checked against a
//! per-element loop implementation that shares no code with the kernel.

use nnkernel::{softmax_rows, Activation, Init, LayerSpec, Mode, Network, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive same-padded conv on a single NHWC image stored as [h][w][c].
fn conv(x: &[Vec<Vec<f64>>], w: &[f64], b: &[f64], k: usize, cin: usize, cout: usize) -> Vec<Vec<Vec<f64>>> {
    let h = x.len();
    let wd = x[0].len();
    let pad = (k / 2) as isize;
    let mut out = vec![vec![vec![0.0; cout]; wd]; h];
    for y in 0..h {
        for xx in 0..wd {
            for o in 0..cout {
                let mut acc = b[o];
                for ky in 0..k {
                    for kx in 0..k {
                        let iy = y as isize + ky as isize - pad;
                        let ix = xx as isize + kx as isize - pad;
                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                            continue;
                        }
                        for c in 0..cin {
                            let widx = ((ky * k + kx) * cin + c) * cout + o;
                            acc += x[iy as usize][ix as usize][c] * w[widx];
                        }
                    }
                }
                out[y][xx][o] = acc;
            }
        }
    }
    out
}

fn bn_eval(x: &mut [Vec<Vec<f64>>], gamma: &[f64], beta: &[f64], mean: &[f64], var: &[f64]) {
    for row in x.iter_mut() {
        for px in row.iter_mut() {
            for c in 0..px.len() {
                px[c] = gamma[c] * (px[c] - mean[c]) / (var[c] + 1e-5).sqrt() + beta[c];
            }
        }
    }
}

fn pool(x: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let (h, w, c) = (x.len() / 2, x[0].len() / 2, x[0][0].len());
    let mut out = vec![vec![vec![0.0; c]; w]; h];
    for y in 0..h {
        for xx in 0..w {
            for ch in 0..c {
                let vals = [
                    x[2 * y][2 * xx][ch],
                    x[2 * y][2 * xx + 1][ch],
                    x[2 * y + 1][2 * xx][ch],
                    x[2 * y + 1][2 * xx + 1][ch],
                ];
                out[y][xx][ch] = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        }
    }
    out
}

fn elu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        v.exp() - 1.0
    }
}

fn dense(x: &[f64], w: &[f64], b: &[f64], out: usize) -> Vec<f64> {
    (0..out)
        .map(|o| b[o] + x.iter().enumerate().map(|(i, v)| v * w[i * out + o]).sum::<f64>())
        .collect()
}

#[test]
fn scheme_network_matches_loop_oracle() {
    let classes = 5;
    let specs = vec![
        LayerSpec::Conv2d { in_channels: 1, out_channels: 3, kernel: 3 },
        LayerSpec::BatchNorm { channels: 3 },
        LayerSpec::MaxPool,
        LayerSpec::Activation(Activation::Elu),
        LayerSpec::Conv2d { in_channels: 3, out_channels: 4, kernel: 5 },
        LayerSpec::BatchNorm { channels: 4 },
        LayerSpec::MaxPool,
        LayerSpec::Activation(Activation::Elu),
        LayerSpec::Flatten,
        LayerSpec::Dense { inputs: 36, outputs: 8 },
        LayerSpec::Activation(Activation::Elu),
        LayerSpec::Dropout { rate: 0.1 },
        LayerSpec::Dense { inputs: 8, outputs: 8 },
        LayerSpec::Activation(Activation::Elu),
        LayerSpec::Dropout { rate: 0.1 },
        LayerSpec::Dense { inputs: 8, outputs: classes },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut net = Network::new(&specs, Init::KaimingUniform, &mut rng).unwrap();
    let batch: Vec<f64> = (0..4 * 144).map(|_| rng.random()).collect();
    let batch = Tensor::new(vec![4, 12, 12, 1], batch).unwrap();
    // one train pass so the batchnorm running statistics are non-trivial
    net.forward(&batch, Mode::Train, &mut rng).unwrap();
    let got = net.forward(&batch, Mode::Eval, &mut rng).unwrap();
    assert_eq!(got.shape(), &[4, classes]);

    let st: Vec<Vec<f64>> = net.state().iter().map(|t| t.data().to_vec()).collect();
    for n in 0..4 {
        let img = batch.row(n);
        let x: Vec<Vec<Vec<f64>>> = (0..12)
            .map(|y| (0..12).map(|xx| vec![img[y * 12 + xx]]).collect())
            .collect();
        let mut a = conv(&x, &st[0], &st[1], 3, 1, 3);
        bn_eval(&mut a, &st[2], &st[3], &st[4], &st[5]);
        let mut a = pool(&a);
        a.iter_mut().flatten().flatten().for_each(|v| *v = elu(*v));
        let mut a = conv(&a, &st[6], &st[7], 5, 3, 4);
        bn_eval(&mut a, &st[8], &st[9], &st[10], &st[11]);
        let mut a = pool(&a);
        a.iter_mut().flatten().flatten().for_each(|v| *v = elu(*v));
        let flat: Vec<f64> = a.into_iter().flatten().flatten().collect();
        let h: Vec<f64> = dense(&flat, &st[12], &st[13], 8).into_iter().map(elu).collect();
        let h: Vec<f64> = dense(&h, &st[14], &st[15], 8).into_iter().map(elu).collect();
        let logits = dense(&h, &st[16], &st[17], classes);
        for (a, b) in got.row(n).iter().zip(&logits) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let p = softmax_rows(&logits);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
