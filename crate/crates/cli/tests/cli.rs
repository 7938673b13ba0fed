use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 5

[data]
classes = 3
samples_per_class = 16

[zoo]
models_per_domain = 15
disjoint_sizes = [6, 2, 2]

[zoo.train]
epochs = 1

[fingerprint]
queries = 4

[dream]
alpha = 1e-3
beta = 1e-2
epochs = 20
batch_size = 4
generator_hidden = 16
embedding_dim = 8
discriminator_widths = [16, 8]
trunk_width = 16

[baselines]
lr = 1e-2
epochs = 20

[harness]
trials = 1
methods = ["random", "kennen", "dream"]
class_subset = [0, 1]

[harness.probe]
epochs = 50
"#;

fn dream(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dream"))
        .arg("--config")
        .arg(dir.join("tiny.toml"))
        .arg("--out-dir")
        .arg(dir.join("run"))
        .arg("--jobs")
        .arg("1")
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    if !out.status.success() {
        eprintln!("{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dream(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}");
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    for cmd in [&["gen-data"][..], &["train-zoo"], &["split-zoo"], &["fingerprint"]] {
        ok(dir.path(), cmd);
    }
    dir
}

#[test]
fn every_subcommand_runs_end_to_end() {
    let dir = setup();
    let d = dir.path();
    let run = d.join("run");
    assert!(run.join("fingerprints/target_2.fp").exists());

    let p = ok(d, &["train-dream", "--target", "0"]);
    let pipeline = p.trim().to_string();
    assert!(pipeline.ends_with("dream_target0_trial0.bin"));
    for m in ["kennen", "mmd", "svm"] {
        ok(d, &["train-baseline", "--method", m, "--target", "0"]);
    }

    let preds = d.join("preds.csv");
    let line = ok(d, &["eval", "--pipeline", &pipeline, "--target", "0", "--predictions", preds.to_str().unwrap()]);
    let reported: Vec<f64> = line
        .split_whitespace()
        .filter_map(|t| t.parse().ok())
        .collect();
    // Recount head accuracy straight from the predictions file.
    let text = std::fs::read_to_string(&preds).unwrap();
    let rows: Vec<Vec<usize>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let recount: Vec<f64> = (0..9)
        .map(|a| 100.0 * rows.iter().filter(|r| r[1 + a] == r[10 + a]).count() as f64 / rows.len() as f64)
        .collect();
    let order = [0, 1, 2, 4, 5, 6, 7, 8, 3];
    for (k, &a) in order.iter().enumerate() {
        assert!((reported[k] - recount[a]).abs() < 0.006, "column {k}");
    }

    let fp = run.join("fingerprints/target_0.fp");
    let emb = d.join("emb.csv");
    ok(d, &["export-embeddings", "--pipeline", &pipeline, "--fingerprints", fp.to_str().unwrap(), "--output", emb.to_str().unwrap()]);
    let first = std::fs::read(&emb).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let fp_rows = std::fs::read_to_string(&fp).unwrap().lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(text.lines().count() - 1, fp_rows);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 2 + 8));
    ok(d, &["export-embeddings", "--pipeline", &pipeline, "--fingerprints", fp.to_str().unwrap(), "--output", emb.to_str().unwrap()]);
    assert_eq!(std::fs::read(&emb).unwrap(), first);

    let probe = ok(d, &["probe", "--pipeline", &pipeline, "--target", "0"]);
    assert!(probe.contains("probe on raw fingerprints"));

    ok(d, &["report"]);
    let table = std::fs::read(run.join("results/lodo.csv")).unwrap();
    ok(d, &["report"]);
    assert_eq!(std::fs::read(run.join("results/lodo.csv")).unwrap(), table, "rerun is byte-identical");
    let csv = String::from_utf8(table).unwrap();
    assert!(csv.starts_with("method,target,trial,act,drop,pool,ks,conv,fc,opt,bs,bn,avg"));
    assert!(csv.lines().any(|l| l.starts_with("random,") && l.ends_with("39.8148")));

    ok(d, &["report", "--mode", "class-subset"]);
    assert!(std::fs::read_to_string(run.join("results/class_subset.csv")).unwrap().contains("dream*"));
    ok(d, &["sweep", "--axis", "query-count", "--values", "2,4"]);
    assert!(run.join("results/sweep_query_count.csv").exists());
}

#[test]
fn bad_input_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("tiny.toml"), "[dream]\nlamda = 1.0\n").unwrap();
    assert_eq!(dream(d, &["gen-data"]).status.code(), Some(2));
    std::fs::write(d.join("tiny.toml"), TINY).unwrap();
    assert_eq!(dream(d, &["train-zoo"]).status.code(), Some(2), "no data yet");
    assert_eq!(dream(d, &["sweep", "--axis", "depth"]).status.code(), Some(2));
    let no_cmd = Command::new(env!("CARGO_BIN_EXE_dream")).output().unwrap();
    assert_eq!(no_cmd.status.code(), Some(2));
}

#[test]
fn mismatched_artifacts_exit_with_incompatibility_code() {
    let dir = setup();
    let d = dir.path();
    let pipeline = ok(d, &["train-baseline", "--method", "kennen", "--target", "1"]).trim().to_string();
    std::fs::write(d.join("tiny.toml"), TINY.replace("queries = 4", "queries = 6")).unwrap();
    ok(d, &["fingerprint", "--target", "1"]);
    let out = dream(d, &["eval", "--pipeline", &pipeline, "--target", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));
}

#[test]
fn corrupted_fingerprint_file_is_rejected_with_its_row() {
    let dir = setup();
    let d = dir.path();
    let fp = d.join("run/fingerprints/target_2.fp");
    let text = std::fs::read_to_string(&fp).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let n = lines.len();
    lines[n - 2] = lines[n - 2].replacen(",0.", ",9.", 1);
    std::fs::write(&fp, lines.join("\n") + "\n").unwrap();
    let out = dream(d, &["train-dream", "--target", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains(&format!(":{}:", n - 1)), "{err}");
}
