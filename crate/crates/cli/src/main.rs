use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use dream_core::config::Config;
use dream_core::dream::{read_pipeline, train_dream, write_pipeline, Pipeline};
use dream_core::fingerprint::read_fingerprints;
use dream_core::harness::{
    run_domain_shift, run_lodo, shared_combinations, sweep, sweep_csv, train_method, trial_seed, write_embeddings,
    Method, ShiftMode, SweepAxis,
};
use dream_core::workflow::{
    build_zoo, generate_data, load_data, load_zoo, predictions_csv, probe_rotation, standard_split,
    write_rotation_fingerprints, write_run_tables, write_text, Layout, RotationData, Workspace,
};
use dream_core::zoo::{disjoint_attribute_split, write_manifest, AttributeGrid};
use dream_core::{par, Error, Result};

#[derive(Parser)]
#[command(name = "dream", version, about = "Reverse-engineer black-box model attributes across domains")]
struct Cli {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "run")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic image domains.
    GenData,
    /// Train the white-box zoo on the generated domains.
    TrainZoo,
    /// Assign zoo models to train/val/test.
    SplitZoo {
        /// Give each split pairwise-disjoint attribute combinations.
        #[arg(long)]
        disjoint: bool,
    },
    /// Collect each rotation's fingerprints (queries from source domains only).
    Fingerprint {
        /// Target domains; all when omitted.
        #[arg(long)]
        target: Vec<usize>,
    },
    /// Train the adversarial pipeline for one rotation.
    TrainDream {
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Fixed lambda; overrides the config and disables tuning.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Train a baseline for one rotation.
    TrainBaseline {
        #[arg(long)]
        method: BaselineName,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Score a trained pipeline on a rotation's target test models.
    Eval {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        target: usize,
        /// Per-model predictions file.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// One full evaluation per value of a parameter.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated values; the configured sweep when omitted.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Write generator embeddings of a fingerprint file.
    ExportEmbeddings {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        fingerprints: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Domain-probe accuracy on raw fingerprints versus embeddings.
    Probe {
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long)]
        target: usize,
    },
    /// Run the full leave-one-domain-out protocol and write result tables.
    Report {
        #[arg(long, value_enum, default_value = "standard")]
        mode: ReportMode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineName {
    Kennen,
    Mmd,
    Svm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportMode {
    Standard,
    ClassSubset,
    Disjoint,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    par::configure_jobs(cli.jobs);
    let layout = Layout::new(&cli.out_dir);
    match cli.command {
        Command::GenData => {
            let data = generate_data(&cfg, &layout)?;
            info!("wrote {} domains under {}", data.len(), layout.root.display());
        }
        Command::TrainZoo => {
            let data = load_data(&cfg, &layout)?;
            let (zoo, _) = build_zoo(&cfg, &layout, &data)?;
            info!("trained {} models", zoo.records.len());
        }
        Command::SplitZoo { disjoint } => {
            let (mut zoo, _) = load_zoo(&layout)?;
            if disjoint {
                let seed = dream_core::seed::derive_labeled(cfg.seed, "split", 1);
                disjoint_attribute_split(&mut zoo, &AttributeGrid::full(), cfg.zoo.disjoint_split_sizes(), seed)?;
                let shared = shared_combinations(&zoo);
                if !shared.is_empty() {
                    return Err(Error::validation(format!("{} combinations shared across splits", shared.len())));
                }
            } else {
                standard_split(&cfg, &mut zoo)?;
            }
            write_manifest(&layout.manifest(), &zoo)?;
        }
        Command::Fingerprint { target } => {
            let ws = Workspace::load(&cfg, &layout)?;
            let mut plan = cfg.plan();
            if !target.is_empty() {
                plan.targets = target;
            }
            plan.validate(ws.zoo.domains)?;
            write_rotation_fingerprints(&ws, &plan, &layout)?;
        }
        Command::TrainDream { target, trial, lambda } => {
            let (zoo, _) = load_zoo(&layout)?;
            let rot = RotationData::load(&zoo, &layout.fingerprints(target), target, None)?;
            let seed = trial_seed(cfg.seed, trial, target);
            let pipeline = match lambda {
                Some(l) => train_dream(&rot.train, rot.meta, &cfg.dream, l, seed)?.pipeline,
                None => train_method(Method::Dream, &rot.train, &rot.val, rot.meta, &cfg.settings(), seed)?
                    .0
                    .expect("dream returns a pipeline"),
            };
            save(&layout, &pipeline, Method::Dream, target, trial)?;
        }
        Command::TrainBaseline { method, target, trial } => {
            let method = match method {
                BaselineName::Kennen => Method::Kennen,
                BaselineName::Mmd => Method::Mmd,
                BaselineName::Svm => Method::Svm,
            };
            let (zoo, _) = load_zoo(&layout)?;
            let rot = RotationData::load(&zoo, &layout.fingerprints(target), target, None)?;
            let seed = trial_seed(cfg.seed, trial, target);
            let (pipeline, _) = train_method(method, &rot.train, &rot.val, rot.meta, &cfg.settings(), seed)?;
            save(&layout, &pipeline.expect("baselines return a pipeline"), method, target, trial)?;
        }
        Command::Eval {
            pipeline,
            target,
            predictions,
        } => {
            let (zoo, _) = load_zoo(&layout)?;
            let p = read_pipeline(&pipeline)?;
            let rot = RotationData::load(&zoo, &layout.fingerprints(target), target, None)?;
            let (acc, pred) = rot.evaluate(&p)?;
            let out = predictions.unwrap_or_else(|| layout.results(&format!("predictions_target{target}.csv")));
            write_text(&out, &predictions_csv(&rot.test.ids, &rot.test.labels, &pred))?;
            let row = acc.report_order().map(|v| format!("{v:.2}")).join(" ");
            println!("{} target {target}: {row} avg {:.2}", p.kind.name(), acc.average);
        }
        Command::Sweep { axis, values } => {
            let axis: SweepAxis = axis.parse()?;
            let values = if values.is_empty() {
                match axis {
                    SweepAxis::Lambda => cfg.harness.lambda_sweep.clone(),
                    SweepAxis::QueryCount => cfg.harness.query_sweep.iter().map(|&v| v as f64).collect(),
                    SweepAxis::ZooSize => cfg.harness.zoo_size_sweep.iter().map(|&v| v as f64).collect(),
                }
            } else {
                values
            };
            let ws = Workspace::load(&cfg, &layout)?;
            let points = sweep(&ws.experiment(), &cfg.plan(), &cfg.settings(), axis, &values)?;
            let path = layout.results(&format!("sweep_{}.csv", axis.name()));
            write_text(&path, &sweep_csv(axis, &points))?;
            println!("{}", path.display());
        }
        Command::ExportEmbeddings {
            pipeline,
            fingerprints,
            output,
        } => {
            let (zoo, _) = load_zoo(&layout)?;
            let p = read_pipeline(&pipeline)?;
            let set = read_fingerprints(&fingerprints)?;
            let out = output.unwrap_or_else(|| layout.results("embeddings.csv"));
            dream_core::workflow::ensure_parent(&out)?;
            write_embeddings(&out, &p, &set, zoo.grid_hash)?;
            println!("{}", out.display());
        }
        Command::Probe { pipeline, target } => {
            let (zoo, _) = load_zoo(&layout)?;
            let p = read_pipeline(&pipeline)?;
            let set = read_fingerprints(&layout.fingerprints(target))?;
            let c = probe_rotation(&zoo, &set, target, &p, &cfg.harness.probe, cfg.seed)?;
            println!(
                "target {target}: probe on raw fingerprints {:.2}, on embeddings {:.2} (chance {:.2}, {} test rows)",
                c.raw.accuracy, c.embedded.accuracy, c.raw.chance, c.raw.n_test
            );
        }
        Command::Report { mode } => {
            let ws = Workspace::load(&cfg, &layout)?;
            let exp = ws.experiment();
            let plan = cfg.plan();
            let settings = cfg.settings();
            let (name, run) = match mode {
                ReportMode::Standard => ("lodo", run_lodo(&exp, &plan, &settings)?),
                ReportMode::ClassSubset => {
                    let mode = ShiftMode::ClassSubset(cfg.harness.class_subset.clone());
                    ("class_subset", run_domain_shift(&exp, &plan, &settings, &mode, &AttributeGrid::full())?)
                }
                ReportMode::Disjoint => {
                    let mode = ShiftMode::DisjointCombinations {
                        sizes: cfg.zoo.disjoint_split_sizes(),
                        split_seed: dream_core::seed::derive_labeled(cfg.seed, "split", 1),
                    };
                    ("disjoint", run_domain_shift(&exp, &plan, &settings, &mode, &AttributeGrid::full())?)
                }
            };
            write_run_tables(&layout, name, &run)?;
            print!("{}", run.table.to_text());
        }
    }
    Ok(())
}

fn save(layout: &Layout, p: &Pipeline, method: Method, target: usize, trial: usize) -> Result<()> {
    let path = layout.pipeline(method.name(), target, trial);
    dream_core::workflow::ensure_parent(&path)?;
    write_pipeline(&path, p)?;
    println!("{}", path.display());
    Ok(())
}
