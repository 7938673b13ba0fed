//! Finite-difference checks of the game's losses and their composition
//! with the generator and discriminator networks.

use dream_core::baselines::mmd_penalty;
use dream_core::dream::{classifier_loss, discriminator_loss, generator_adversarial_loss, AttrLabels, DreamConfig};
use dream_core::zoo::{HEAD_SIZES, TOTAL_HEAD_OUTPUTS};
use nnkernel::{Init, Mode, Network, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const INSTANCES: u64 = 20;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-5)
}

fn random_tensor(shape: &[usize], scale: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn numeric(x: &Tensor, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    let mut xp = x.clone();
    (0..x.len())
        .map(|j| {
            let orig = x.data()[j];
            xp.data_mut()[j] = orig + H;
            let lp = f(&xp);
            xp.data_mut()[j] = orig - H;
            let lm = f(&xp);
            xp.data_mut()[j] = orig;
            (lp - lm) / (2.0 * H)
        })
        .collect()
}

/// Worst error over every parameter of `net` for a scalar `loss(net)`.
fn param_error(net: &mut Network, analytic: &[Vec<f64>], mut loss: impl FnMut(&mut Network) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (pi, grad) in analytic.iter().enumerate() {
        let mut num = vec![0.0; grad.len()];
        for (j, slot) in num.iter_mut().enumerate() {
            let orig = net.params()[pi].value.data()[j];
            net.params_mut()[pi].value.data_mut()[j] = orig + H;
            let lp = loss(net);
            net.params_mut()[pi].value.data_mut()[j] = orig - H;
            let lm = loss(net);
            net.params_mut()[pi].value.data_mut()[j] = orig;
            *slot = (lp - lm) / (2.0 * H);
        }
        worst = worst.max(rel_err(grad, &num));
    }
    worst
}

fn grads(net: &Network) -> Vec<Vec<f64>> {
    net.params().iter().map(|p| p.grad.data().to_vec()).collect()
}

fn small_config(rng: &mut ChaCha8Rng) -> DreamConfig {
    DreamConfig {
        generator_hidden: rng.random_range(3..7),
        embedding_dim: rng.random_range(2..5),
        discriminator_widths: vec![rng.random_range(3..6), rng.random_range(2..5)],
        ..DreamConfig::default()
    }
}

/// Random weights and biases; zero biases would park dead ReLUs exactly on
/// their kink.
fn net(specs: &[nnkernel::LayerSpec], rng: &mut ChaCha8Rng) -> Network {
    let mut n = Network::new(specs, Init::Normal { std: 0.6 }, rng).unwrap();
    for p in n.params_mut() {
        p.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.8..0.8));
    }
    n
}

fn d_loss(d: &mut Network, z: &Tensor, n_true: usize) -> f64 {
    let p = d.forward(z, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    discriminator_loss(p.data(), n_true).0
}

fn report(name: &str, worst: f64) {
    println!("{name}: worst relative error {worst:.2e} over {INSTANCES} instances");
    assert!(worst < TOL, "{name}: {worst}");
}

#[test]
fn discriminator_loss_through_discriminator() {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i);
        let cfg = small_config(&mut rng);
        let mut d = net(&cfg.discriminator_specs(), &mut rng);
        let n = rng.random_range(2..6);
        let n_true = rng.random_range(1..n);
        let z = random_tensor(&[n, cfg.embedding_dim], 1.0, &mut rng);
        let p = d.forward(&z, Mode::Train, &mut rng).unwrap();
        let (_, dp) = discriminator_loss(p.data(), n_true);
        d.zero_grad();
        let dz = d.backward(&Tensor::new(vec![n, 1], dp).unwrap()).unwrap();
        let g = grads(&d);
        worst = worst.max(param_error(&mut d, &g, |d| d_loss(d, &z, n_true)));
        let num = numeric(&z, |z| d_loss(&mut d, z, n_true));
        worst = worst.max(rel_err(dz.data(), &num));
    }
    report("discriminator", worst);
}

#[test]
fn generator_adversarial_term_wrt_embeddings() {
    for non_saturating in [false, true] {
        let mut worst: f64 = 0.0;
        for i in 0..INSTANCES {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + i);
            let cfg = small_config(&mut rng);
            let mut d = net(&cfg.discriminator_specs(), &mut rng);
            let z = random_tensor(&[rng.random_range(1..5), cfg.embedding_dim], 1.0, &mut rng);
            let adv = |d: &mut Network, z: &Tensor| {
                let p = d.forward(z, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
                generator_adversarial_loss(p.data(), non_saturating)
            };
            let (_, dp) = adv(&mut d, &z);
            d.zero_grad();
            let dz = d.backward(&Tensor::new(vec![z.rows(), 1], dp).unwrap()).unwrap();
            let num = numeric(&z, |z| adv(&mut d, z).0);
            worst = worst.max(rel_err(dz.data(), &num));
        }
        report(if non_saturating { "generator (non-saturating)" } else { "generator (saturating)" }, worst);
    }
}

#[test]
fn discriminator_of_generator_wrt_generator_parameters() {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + i);
        let cfg = small_config(&mut rng);
        let width = rng.random_range(2..6);
        let mut g = net(&cfg.generator_specs(width), &mut rng);
        let mut d = net(&cfg.discriminator_specs(), &mut rng);
        let x = random_tensor(&[rng.random_range(1..5), width], 1.0, &mut rng);
        let total = |g: &mut Network, d: &mut Network| {
            let z = g.forward(&x, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let p = d.forward(&z, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            generator_adversarial_loss(p.data(), false)
        };
        let (_, dp) = total(&mut g, &mut d);
        d.zero_grad();
        let dz = d.backward(&Tensor::new(vec![x.rows(), 1], dp).unwrap()).unwrap();
        g.zero_grad();
        g.backward_params(&dz).unwrap();
        let analytic = grads(&g);
        worst = worst.max(param_error(&mut g, &analytic, |g| total(g, &mut d).0));
    }
    report("D o G", worst);
}

fn random_labels(rng: &mut ChaCha8Rng) -> AttrLabels {
    HEAD_SIZES.map(|k| rng.random_range(0..k))
}

#[test]
fn head_cross_entropy_wrt_logits() {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + i);
        let n = rng.random_range(1..5);
        let logits = random_tensor(&[n, TOTAL_HEAD_OUTPUTS], 3.0, &mut rng);
        let labels: Vec<AttrLabels> = (0..n).map(|_| random_labels(&mut rng)).collect();
        let (_, dl) = classifier_loss(&logits, &labels).unwrap();
        let num = numeric(&logits, |l| classifier_loss(l, &labels).unwrap().0);
        worst = worst.max(rel_err(dl.data(), &num));
    }
    report("cross-entropy heads", worst);
}

#[test]
fn reverse_classifier_end_to_end() {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i);
        let cfg = DreamConfig {
            trunk_width: rng.random_range(3..7),
            ..small_config(&mut rng)
        };
        let mut trunk = net(&cfg.trunk_specs(cfg.embedding_dim), &mut rng);
        let mut head = net(&cfg.head_specs(), &mut rng);
        let n = rng.random_range(1..4);
        let z = random_tensor(&[n, cfg.embedding_dim], 1.0, &mut rng);
        let labels: Vec<AttrLabels> = (0..n).map(|_| random_labels(&mut rng)).collect();
        let total = |t: &mut Network, h: &mut Network, z: &Tensor| {
            let a = t.forward(z, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let l = h.forward(&a, Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            classifier_loss(&l, &labels).unwrap()
        };
        let (_, dl) = total(&mut trunk, &mut head, &z);
        head.zero_grad();
        let da = head.backward(&dl).unwrap();
        trunk.zero_grad();
        let dz = trunk.backward(&da).unwrap();
        let gt = grads(&trunk);
        worst = worst.max(param_error(&mut trunk, &gt, |t| total(t, &mut head, &z).0));
        let num = numeric(&z, |z| total(&mut trunk, &mut head, z).0);
        worst = worst.max(rel_err(dz.data(), &num));
    }
    report("trunk + heads", worst);
}

#[test]
fn mmd_penalty_wrt_features() {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + i);
        let m = rng.random_range(2..4);
        let d = rng.random_range(1..4);
        let groups: Vec<Tensor> = (0..m)
            .map(|k| {
                let mut t = random_tensor(&[rng.random_range(2..5), d], 1.0, &mut rng);
                t.data_mut().iter_mut().for_each(|v| *v += 0.5 * k as f64);
                t
            })
            .collect();
        let sigma = rng.random_range(0.5..2.0);
        let refs: Vec<&Tensor> = groups.iter().collect();
        let (_, g, _) = mmd_penalty(&refs, Some(sigma)).unwrap();
        for k in 0..m {
            let num = numeric(&groups[k], |x| {
                let mut refs: Vec<&Tensor> = groups.iter().collect();
                refs[k] = x;
                mmd_penalty(&refs, Some(sigma)).unwrap().0
            });
            worst = worst.max(rel_err(g[k].data(), &num));
        }
    }
    report("mmd", worst);
}
