//! Acceptance suite. Every test prints one `criterion N: PASS|FAIL` line
//! with the measured values before asserting.
//!
//! Criteria 6-8 share one full run of the default configuration (zoo,
//! fingerprints, training, evaluation), built once per process.

use std::collections::HashSet;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dream_core::baselines::{mmd_penalty, train_kennen};
use dream_core::config::Config;
use dream_core::dream::{
    classifier_loss, discriminator_loss, encode_pipeline, generator_adversarial_loss, partition_true_false,
    train_with, AttrLabels, DreamConfig, PipelineKind, TrainOptions,
};
use dream_core::fingerprint::{format_fingerprints, parse_fingerprints};
use dream_core::harness::{
    random_row, run_domain_shift, run_lodo, shared_combinations, LodoRun, Method, ShiftMode,
};
use dream_core::workflow::{
    build_zoo, generate_data, probe_rotation, standard_split, Layout, RotationData, Workspace,
};
use dream_core::zoo::{
    checkpoint_bytes, disjoint_attribute_split, format_manifest, parse_manifest, AttributeGrid, ModelZoo,
    HEAD_SIZES, REPORT_ORDER, TOTAL_HEAD_OUTPUTS,
};
use nnkernel::{Activation, Init, LayerSpec, Mode, Network, Optimizer, OptimizerKind, Param, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

// ---------------------------------------------------------------- 1

const H: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
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

fn param_error(net: &mut Network, mut loss: impl FnMut(&mut Network) -> f64) -> f64 {
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.data().to_vec()).collect();
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

fn random_net(specs: &[LayerSpec], rng: &mut ChaCha8Rng) -> Network {
    let mut n = Network::new(specs, Init::KaimingUniform, rng).unwrap();
    for p in n.params_mut() {
        p.value.data_mut().iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
    }
    n
}

fn train_forward(net: &mut Network, x: &Tensor, seed: u64) -> Tensor {
    net.forward(x, Mode::Train, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// `sum(r * net(x))` checked wrt parameters and input.
fn layer_error(specs: &[LayerSpec], shape: &[usize], rng: &mut ChaCha8Rng) -> f64 {
    let mut net = random_net(specs, rng);
    let x = random_tensor(shape, 1.0, rng);
    let seed = rng.random();
    let y = train_forward(&mut net, &x, seed);
    let r = random_tensor(y.shape(), 1.0, rng);
    net.zero_grad();
    let dx = net.backward(&r).unwrap();
    let loss = |net: &mut Network, x: &Tensor| -> f64 {
        let y = train_forward(net, x, seed);
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    };
    let p = param_error(&mut net, |n| loss(n, &x));
    let num = numeric(&x, |x| loss(&mut net, x));
    p.max(rel_err(dx.data(), &num))
}

fn worst_over(mut f: impl FnMut(&mut ChaCha8Rng) -> f64, base: u64) -> f64 {
    (0..INSTANCES)
        .map(|i| f(&mut ChaCha8Rng::seed_from_u64(base + i)))
        .fold(0.0, f64::max)
}

fn small_dream(rng: &mut ChaCha8Rng) -> DreamConfig {
    DreamConfig {
        generator_hidden: rng.random_range(3..7),
        embedding_dim: rng.random_range(2..5),
        discriminator_widths: vec![rng.random_range(3..6), rng.random_range(2..5)],
        trunk_width: rng.random_range(3..7),
        ..DreamConfig::default()
    }
}

fn random_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<AttrLabels> {
    (0..n).map(|_| HEAD_SIZES.map(|k| rng.random_range(0..k))).collect()
}

#[test]
fn criterion_01_gradient_checks() {
    let start = Instant::now();
    let mut results: Vec<(&str, f64)> = Vec::new();
    results.push(("dense", worst_over(|r| {
        let (i, o) = (r.random_range(1..6), r.random_range(1..6));
        let b = r.random_range(1..5);
        layer_error(&[LayerSpec::Dense { inputs: i, outputs: o }], &[b, i], r)
    }, 10)));
    results.push(("conv2d", worst_over(|r| {
        let k = if r.random_bool(0.5) { 3 } else { 5 };
        let (ci, co) = (r.random_range(1..3), r.random_range(1..4));
        let spec = LayerSpec::Conv2d { in_channels: ci, out_channels: co, kernel: k };
        layer_error(&[spec], &[2, r.random_range(2..6), r.random_range(2..6), ci], r)
    }, 30)));
    for act in [Activation::Relu, Activation::Prelu, Activation::Elu, Activation::Tanh, Activation::Sigmoid] {
        results.push((act.name(), worst_over(|r| {
            let n = r.random_range(2..8);
            layer_error(&[LayerSpec::Activation(act)], &[3, n], r)
        }, 50)));
    }
    results.push(("dropout", worst_over(|r| {
        let n = r.random_range(4..12);
        layer_error(&[LayerSpec::Dense { inputs: n, outputs: n }, LayerSpec::Dropout { rate: 0.1 }], &[3, n], r)
    }, 70)));
    results.push(("batchnorm", worst_over(|r| {
        let c = r.random_range(1..3);
        layer_error(&[LayerSpec::BatchNorm { channels: c }], &[2, 3, 2, c], r)
    }, 90)));
    results.push(("maxpool+flatten", worst_over(|r| {
        let c = r.random_range(1..3);
        let shape = [2, 2 * r.random_range(1..3), 2 * r.random_range(1..3), c];
        layer_error(&[LayerSpec::MaxPool, LayerSpec::Flatten], &shape, r)
    }, 110)));
    results.push(("cross-entropy heads", worst_over(|r| {
        let n = r.random_range(1..5);
        let logits = random_tensor(&[n, TOTAL_HEAD_OUTPUTS], 3.0, r);
        let labels = random_labels(n, r);
        let (_, dl) = classifier_loss(&logits, &labels).unwrap();
        rel_err(dl.data(), &numeric(&logits, |l| classifier_loss(l, &labels).unwrap().0))
    }, 130)));
    results.push(("discriminator", worst_over(|r| {
        let cfg = small_dream(r);
        let mut d = random_net(&cfg.discriminator_specs(), r);
        let n = r.random_range(2..6);
        let n_true = r.random_range(1..n);
        let z = random_tensor(&[n, cfg.embedding_dim], 1.0, r);
        let p = train_forward(&mut d, &z, 0);
        let (_, dp) = discriminator_loss(p.data(), n_true);
        d.zero_grad();
        let dz = d.backward(&Tensor::new(vec![n, 1], dp).unwrap()).unwrap();
        let loss = |d: &mut Network, z: &Tensor| discriminator_loss(train_forward(d, z, 0).data(), n_true).0;
        let e = param_error(&mut d, |d| loss(d, &z));
        e.max(rel_err(dz.data(), &numeric(&z, |z| loss(&mut d, z))))
    }, 150)));
    for non_saturating in [false, true] {
        results.push((
            if non_saturating { "generator-adversarial (non-saturating)" } else { "generator-adversarial" },
            worst_over(|r| {
                let cfg = small_dream(r);
                let mut d = random_net(&cfg.discriminator_specs(), r);
                let z = random_tensor(&[r.random_range(1..5), cfg.embedding_dim], 1.0, r);
                let p = train_forward(&mut d, &z, 0);
                let (_, dp) = generator_adversarial_loss(p.data(), non_saturating);
                d.zero_grad();
                let dz = d.backward(&Tensor::new(vec![z.rows(), 1], dp).unwrap()).unwrap();
                let num = numeric(&z, |z| generator_adversarial_loss(train_forward(&mut d, z, 0).data(), non_saturating).0);
                rel_err(dz.data(), &num)
            }, 170),
        ));
    }
    results.push(("mmd", worst_over(|r| {
        let m = r.random_range(2..4);
        let dim = r.random_range(1..4);
        let groups: Vec<Tensor> = (0..m)
            .map(|k| {
                let mut t = random_tensor(&[r.random_range(2..5), dim], 1.0, r);
                t.data_mut().iter_mut().for_each(|v| *v += 0.5 * k as f64);
                t
            })
            .collect();
        let sigma = r.random_range(0.5..2.0);
        let refs: Vec<&Tensor> = groups.iter().collect();
        let (_, g, _) = mmd_penalty(&refs, Some(sigma)).unwrap();
        (0..m)
            .map(|k| {
                let num = numeric(&groups[k], |x| {
                    let mut refs: Vec<&Tensor> = groups.iter().collect();
                    refs[k] = x;
                    mmd_penalty(&refs, Some(sigma)).unwrap().0
                });
                rel_err(g[k].data(), &num)
            })
            .fold(0.0, f64::max)
    }, 190)));
    results.push(("D o G", worst_over(|r| {
        let cfg = small_dream(r);
        let width = r.random_range(2..6);
        let mut g = random_net(&cfg.generator_specs(width), r);
        let mut d = random_net(&cfg.discriminator_specs(), r);
        let x = random_tensor(&[r.random_range(1..5), width], 1.0, r);
        let total = |g: &mut Network, d: &mut Network| {
            let z = train_forward(g, &x, 0);
            generator_adversarial_loss(train_forward(d, &z, 0).data(), false)
        };
        let (_, dp) = total(&mut g, &mut d);
        d.zero_grad();
        let dz = d.backward(&Tensor::new(vec![x.rows(), 1], dp).unwrap()).unwrap();
        g.zero_grad();
        g.backward_params(&dz).unwrap();
        param_error(&mut g, |g| total(g, &mut d).0)
    }, 210)));
    let elapsed = start.elapsed();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    for (name, e) in &results {
        println!("  gradcheck {name}: {e:.2e}");
    }
    let pass = worst < GRAD_TOL && elapsed < Duration::from_secs(60);
    verdict(
        1,
        pass,
        &format!("worst relative error {worst:.2e} (< 1e-4) over {} checks x {INSTANCES} instances in {elapsed:.1?}", results.len()),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2

fn run_optimizer(kind: OptimizerKind, lr: f64, w0: f64, grads: &[f64]) -> Vec<f64> {
    let mut opt = Optimizer::new(kind, lr).unwrap();
    let mut p = Param {
        value: Tensor::row_vector(vec![w0]),
        grad: Tensor::row_vector(vec![0.0]),
    };
    grads
        .iter()
        .map(|&g| {
            p.grad.data_mut()[0] = g;
            opt.step(&mut [&mut p]).unwrap();
            p.value.data()[0]
        })
        .collect()
}

#[test]
fn criterion_02_optimizer_oracles() {
    let g = [0.5, -2.0, 1.5];
    let (lr, w0) = (0.01, 1.0);
    let sgd = [w0 - lr * g[0], w0 - lr * (g[0] + g[1]), w0 - lr * (g[0] + g[1] + g[2])];
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut adam = Vec::new();
    let (mut m, mut v, mut w) = (0.0, 0.0, w0);
    for (t, &gt) in g.iter().enumerate() {
        m = b1 * m + (1.0 - b1) * gt;
        v = b2 * v + (1.0 - b2) * gt * gt;
        let t = t as i32 + 1;
        w -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        adam.push(w);
    }
    let rho = 0.99f64;
    let mut rms = Vec::new();
    let (mut v, mut w) = (0.0, w0);
    for &gt in &g {
        v = rho * v + (1.0 - rho) * gt * gt;
        w -= lr * gt / (v.sqrt() + eps);
        rms.push(w);
    }
    // Adam with constant unit gradient moves exactly lr/(1+eps) per step.
    let adam_unit = run_optimizer(OptimizerKind::Adam, 0.1, 0.0, &[1.0, 1.0, 1.0]);
    let mut worst: f64 = 0.0;
    for (kind, want) in [(OptimizerKind::Sgd, sgd.to_vec()), (OptimizerKind::Adam, adam), (OptimizerKind::RmsProp, rms)] {
        let got = run_optimizer(kind, lr, w0, &g);
        worst = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    for (t, w) in adam_unit.iter().enumerate() {
        worst = worst.max((w + (t as f64 + 1.0) * 0.1 / (1.0 + 1e-8)).abs());
    }
    let pass = worst < 1e-12;
    verdict(2, pass, &format!("SGD/Adam/RMSprop three-step max deviation {worst:.1e} (< 1e-12)"));
    assert!(pass);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_grid_and_partition() {
    let members = AttributeGrid::full().enumerate();
    let distinct: HashSet<[usize; 9]> = members.iter().map(|a| a.indices()).collect();
    let mut partition_ok = true;
    let mut batches = 0;
    for m in 2..=3usize {
        for len in 1..=6u32 {
            for code in 0..(m as u64).pow(len) {
                let mut c = code;
                let tags: Vec<usize> = (0..len)
                    .map(|_| {
                        let t = (c % m as u64) as usize;
                        c /= m as u64;
                        t
                    })
                    .collect();
                batches += 1;
                for i in 0..m {
                    let (t, f) = partition_true_false(&tags, m, i).unwrap();
                    let mut all: Vec<usize> = t.iter().chain(&f).copied().collect();
                    all.sort_unstable();
                    partition_ok &= all == (0..tags.len()).collect::<Vec<_>>();
                    partition_ok &= t.iter().all(|&r| tags[r] == i) && f.iter().all(|&r| tags[r] != i);
                }
            }
        }
    }
    let pass = members.len() == 5184 && distinct.len() == 5184 && partition_ok;
    verdict(
        3,
        pass,
        &format!(
            "grid {} members ({} distinct); partition disjoint and covering on {batches} exhaustive batches: {partition_ok}",
            members.len(),
            distinct.len()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_04_random_row() {
    let row = random_row();
    let got = row.report_order();
    let want = [25.0, 50.0, 50.0, 50.0, 100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0, 50.0];
    let shown: Vec<String> = got.iter().map(|v| format!("{v:.2}")).collect();
    let pass = got.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9)
        && (row.average - 39.81).abs() <= 0.005
        && shown == ["25.00", "50.00", "50.00", "50.00", "33.33", "33.33", "33.33", "33.33", "50.00"];
    verdict(4, pass, &format!("random row {} avg {:.4}", shown.join(" "), row.average));
    assert_eq!(REPORT_ORDER.len(), 9);
    assert!(pass);
}

// ---------------------------------------------------------------- shared runs

struct SmallRun {
    cfg: Config,
    ws: Workspace,
    run: LodoRun,
    table_csv: String,
    manifest: String,
    fingerprints: Vec<String>,
}

fn small_config() -> Config {
    let mut cfg = Config::default();
    cfg.seed = 77;
    cfg.data.classes = 3;
    cfg.data.samples_per_class = 24;
    cfg.zoo.models_per_domain = 20;
    cfg.zoo.disjoint_sizes = [8, 3, 3];
    cfg.zoo.train.epochs = 2;
    cfg.fingerprint.queries = 6;
    cfg.dream.epochs = 60;
    cfg.dream.batch_size = 8;
    cfg.dream.generator_hidden = 32;
    cfg.dream.embedding_dim = 16;
    cfg.dream.discriminator_widths = vec![32, 16];
    cfg.dream.trunk_width = 32;
    cfg.baselines.epochs = 60;
    cfg.harness.trials = 2;
    cfg.harness.methods = vec![Method::Random, Method::Svm, Method::Kennen, Method::Mmd, Method::Dream];
    cfg
}

/// Builds everything from scratch in a fresh directory.
fn small_run() -> SmallRun {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let layout = Layout::new(dir.path());
    let data = generate_data(&cfg, &layout).unwrap();
    let (mut zoo, networks) = build_zoo(&cfg, &layout, &data).unwrap();
    standard_split(&cfg, &mut zoo).unwrap();
    let ws = Workspace {
        data,
        zoo,
        networks,
        names: cfg.data.names(),
    };
    let run = run_lodo(&ws.experiment(), &cfg.plan(), &cfg.settings()).unwrap();
    SmallRun {
        table_csv: run.table.to_csv(),
        manifest: format_manifest(&ws.zoo),
        fingerprints: run.rotations.iter().map(|r| format_fingerprints(&r.fingerprints)).collect(),
        cfg,
        ws,
        run,
    }
}

fn shared_small() -> &'static SmallRun {
    static RUN: OnceLock<SmallRun> = OnceLock::new();
    RUN.get_or_init(small_run)
}

struct FullRun {
    cfg: Config,
    zoo: ModelZoo,
    run: LodoRun,
    elapsed: Duration,
}

/// The default configuration end to end: data, zoo, split, fingerprints,
/// every method over every rotation and trial.
fn full_run() -> &'static FullRun {
    static RUN: OnceLock<FullRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let cfg = Config::default();
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path());
        let data = generate_data(&cfg, &layout).unwrap();
        let (mut zoo, networks) = build_zoo(&cfg, &layout, &data).unwrap();
        standard_split(&cfg, &mut zoo).unwrap();
        let ws = Workspace {
            data,
            zoo,
            networks,
            names: cfg.data.names(),
        };
        let run = run_lodo(&ws.experiment(), &cfg.plan(), &cfg.settings()).unwrap();
        println!("{}", run.table.to_text());
        FullRun {
            elapsed: start.elapsed(),
            zoo: ws.zoo,
            cfg,
            run,
        }
    })
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_structural_reduction() {
    let s = shared_small();
    let mut identical = true;
    let mut cells = 0;
    for target in 0..s.ws.zoo.domains {
        let rot = RotationData::from_set(&s.ws.zoo, s.run.rotations[target].fingerprints.clone(), target, None).unwrap();
        for seed in [1u64, 2, 3] {
            let off = DreamConfig {
                adversarial: false,
                ..s.cfg.dream.clone()
            };
            let opts = TrainOptions {
                kind: PipelineKind::Kennen,
                lambda: 0.0,
                mmd_gamma: 0.0,
                mmd_sigma: None,
            };
            let dream = train_with(&rot.train, rot.meta, &off, opts, seed).unwrap();
            let kennen = train_kennen(&rot.train, rot.meta, &s.cfg.dream, seed).unwrap();
            identical &= encode_pipeline(&dream.pipeline).unwrap() == encode_pipeline(&kennen.pipeline).unwrap();
            identical &= dream.history == kennen.history;
            cells += 1;
        }
    }
    verdict(5, identical, &format!("dream(lambda=0, discriminators off) == kennen bit-for-bit on {cells} seeded runs"));
    assert!(identical);
}

// ---------------------------------------------------------------- 6, 7, 8

fn method_mean(run: &LodoRun, method: &str) -> f64 {
    run.table.overall(method).map_or(f64::NAN, |s| s.mean.average)
}

#[test]
fn criterion_06_lodo_trend() {
    let f = full_run();
    let dream = method_mean(&f.run, "dream");
    let kennen = method_mean(&f.run, "kennen");
    let random = method_mean(&f.run, "random");
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let within = f.elapsed <= Duration::from_secs(45 * 60);
    let pass = dream >= random + 5.0 && dream > kennen && within;
    verdict(
        6,
        pass,
        &format!(
            "dream {dream:.2} vs random {random:.2} (+5 needed) and kennen {kennen:.2}; \
             {} rotations x {} trials in {:.1} min on {cores} core(s)",
            f.run.rotations.len(),
            f.cfg.harness.trials,
            f.elapsed.as_secs_f64() / 60.0
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_domain_invariance_probe() {
    let f = full_run();
    let mut pass = true;
    let mut parts = Vec::new();
    for rot in &f.run.rotations {
        let (mut raw, mut z, mut k) = (0.0, 0.0, 0.0);
        for r in rot.runs.iter().filter(|r| r.method == Method::Dream) {
            let p = r.pipeline.as_ref().unwrap();
            let c = probe_rotation(&f.zoo, &rot.fingerprints, rot.target, p, &f.cfg.harness.probe, f.cfg.seed).unwrap();
            raw += c.raw.accuracy;
            z += c.embedded.accuracy;
            k += 1.0;
        }
        let (raw, z) = (raw / k, z / k);
        pass &= z <= raw - 10.0;
        parts.push(format!("target {}: raw {raw:.1} z {z:.1}", rot.target));
    }
    verdict(7, pass, &format!("probe accuracy, held-out source rows, mean over trials ({})", parts.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_08_convergence() {
    let f = full_run();
    let mut worst: f64 = 0.0;
    for rot in &f.run.rotations {
        for r in rot.runs.iter().filter(|r| r.method == Method::Dream) {
            let h = &r.history;
            let k = (h.len() / 10).max(1);
            let tail = h[h.len() - k..].iter().map(|e| e.classifier).sum::<f64>() / k as f64;
            worst = worst.max(tail / h[0].classifier);
        }
    }
    let pass = worst < 0.5;
    verdict(8, pass, &format!("worst final-10% mean / first-epoch classifier loss = {worst:.3} (< 0.5)"));
    assert!(pass);
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_determinism_and_formats() {
    let a = shared_small();
    let b = small_run();
    let tables = a.table_csv == b.table_csv && a.run.table.to_text() == b.run.table.to_text();
    let manifests = a.manifest == b.manifest;
    let fps = a.fingerprints == b.fingerprints;
    let nets = a.ws.networks.iter().zip(&b.ws.networks).all(|(x, y)| checkpoint_bytes(x) == checkpoint_bytes(y));

    let mut round_trips = true;
    for (text, rot) in a.fingerprints.iter().zip(&a.run.rotations) {
        let back = parse_fingerprints(text, "fp").unwrap();
        round_trips &= back == rot.fingerprints && format_fingerprints(&back) == *text;
    }
    round_trips &= parse_manifest(&a.manifest, "manifest").unwrap() == a.ws.zoo;
    for net in a.ws.networks.iter().take(10) {
        let bytes = checkpoint_bytes(net);
        let back = nnkernel::read_network(&mut bytes.as_slice()).unwrap();
        round_trips &= checkpoint_bytes(&back) == bytes;
    }
    for r in a.run.rotations.iter().flat_map(|r| &r.runs) {
        if let Some(p) = &r.pipeline {
            let bytes = encode_pipeline(p).unwrap();
            round_trips &= encode_pipeline(&dream_core::dream::decode_pipeline(&bytes).unwrap()).unwrap() == bytes;
        }
    }

    // corrupt line 4 of a fingerprint file and line 6 of the manifest
    let mut lines: Vec<String> = a.fingerprints[0].lines().map(String::from).collect();
    lines[3] = lines[3].replacen(",0.", ",7.", 1);
    let fp_err = parse_fingerprints(&lines.join("\n"), "fp").unwrap_err().to_string();
    let mut lines: Vec<String> = a.manifest.lines().map(String::from).collect();
    let k = lines.iter().position(|l| l.starts_with(|c: char| c.is_ascii_digit())).unwrap() + 2;
    lines[k] = lines[k].replacen(",relu,", ",swish,", 1).replacen(",tanh,", ",swish,", 1).replacen(",elu,", ",swish,", 1).replacen(",prelu,", ",swish,", 1);
    let man_err = parse_manifest(&lines.join("\n"), "manifest").unwrap_err().to_string();
    let diagnostics = fp_err.contains("fp:4:") && man_err.contains(&format!("manifest:{}:", k + 1));

    let pass = tables && manifests && fps && nets && round_trips && diagnostics;
    verdict(
        9,
        pass,
        &format!(
            "rerun tables {tables}, manifest {manifests}, fingerprints {fps}, checkpoints {nets}; \
             round trips {round_trips}; diagnostics `{fp_err}` / `{man_err}`"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_domain_shift_modes() {
    let s = shared_small();
    let grid = AttributeGrid::full();
    let mut zoo = s.ws.zoo.clone();
    let sizes = s.cfg.zoo.disjoint_split_sizes();
    disjoint_attribute_split(&mut zoo, &grid, sizes, 9).unwrap();
    let shared = shared_combinations(&zoo);
    let mut combos: [HashSet<[usize; 9]>; 3] = Default::default();
    for r in &zoo.records {
        if let Some(i) = dream_core::zoo::Split::USED.iter().position(|&sp| sp == r.split) {
            combos[i].insert(r.attrs.indices());
        }
    }
    let exhaustive = combos[0].is_disjoint(&combos[1]) && combos[0].is_disjoint(&combos[2]) && combos[1].is_disjoint(&combos[2]);
    let disjoint_run = run_domain_shift(
        &s.ws.experiment(),
        &s.cfg.plan(),
        &s.cfg.settings(),
        &ShiftMode::DisjointCombinations { sizes, split_seed: 9 },
        &grid,
    )
    .is_ok();

    let all: Vec<usize> = (0..s.cfg.data.classes).collect();
    let subset = run_domain_shift(&s.ws.experiment(), &s.cfg.plan(), &s.cfg.settings(), &ShiftMode::ClassSubset(all), &grid).unwrap();
    let strip = |csv: &str| csv.replace("*,", ",");
    let degenerate = strip(&subset.table.to_csv()) == s.table_csv;

    let mut full_zoo = full_run().zoo.clone();
    let full_sizes = full_run().cfg.zoo.disjoint_split_sizes();
    let full_ok = disjoint_attribute_split(&mut full_zoo, &grid, full_sizes, 9).is_ok()
        && shared_combinations(&full_zoo).is_empty();

    let pass = shared.is_empty() && exhaustive && disjoint_run && degenerate && full_ok;
    verdict(
        10,
        pass,
        &format!(
            "disjoint split: {} shared combinations, pairwise-disjoint {exhaustive}, run ok {disjoint_run}; \
             default-scale zoo split disjoint {full_ok}; \
             class subset = all classes reproduces the standard table: {degenerate}",
            shared.len()
        ),
    );
    assert!(pass);
}
