use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use log::{info, warn};
use pctadw::dataset::{detect_cycles, load_dataset_dir};
use pctadw::trainer::{write_loss_csv, Trainer};
use pctadw::{Architecture, Embeddings, LossMode, ModelConfig, SamplerConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::validate::TokenizerArgs;
use crate::{usage, CliError, CliResult, DATASET_ENV};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOSS_FILE: &str = "loss.csv";
pub const VECTORS_FILE: &str = "embeddings.txt";

const TRAINING_FLAGS: [&str; 12] = [
    "arch",
    "dim",
    "epochs",
    "s",
    "m",
    "mode",
    "negatives",
    "seed",
    "learning_rate",
    "keep_stopwords",
    "min_count",
    "resume",
];

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(env = DATASET_ENV)]
    dir: PathBuf,
    /// Output directory for checkpoint, loss log, vectors and manifest.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "pctadw2")]
    arch: Architecture,
    /// Embedding width; pctadw2 splits it evenly between the two role vectors.
    #[arg(long, default_value_t = 128)]
    dim: usize,
    /// Total epochs (a resumed run continues up to this count).
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Walk length: parents and children are sampled within this many hops.
    #[arg(long = "s", default_value_t = 2)]
    s: usize,
    /// Cap on samples per node per epoch.
    #[arg(long = "m", default_value_t = 5)]
    m: usize,
    /// Loss: `negative` (negative sampling) or `exact` (full softmax).
    #[arg(long, default_value = "negative")]
    mode: LossMode,
    /// Noise draws per head in negative-sampling mode.
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Adam step size.
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    /// Lock-free parallel workers; only 1 is reproducible.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also write the checkpoint every this many epochs.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Continue from this checkpoint.
    #[arg(long, value_name = "CHECKPOINT")]
    resume: Option<PathBuf>,
    /// Take every training setting from an earlier run's manifest.
    #[arg(long, value_name = "MANIFEST", conflicts_with_all = TRAINING_FLAGS)]
    from_manifest: Option<PathBuf>,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

/// Everything that determines a single-worker run besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSnapshot {
    pub train: TrainConfig,
    pub keep_stopwords: bool,
    pub min_count: u64,
    pub resumed_from: Option<PathBuf>,
}

fn snapshot(args: &TrainArgs) -> CliResult<TrainSnapshot> {
    if let Some(path) = &args.from_manifest {
        let manifest = RunManifest::read(path)?;
        if manifest.command != "train" {
            return usage(format!("{} is not a training manifest", path.display()));
        }
        let mut snap: TrainSnapshot = serde_json::from_value(manifest.config).context("manifest config")?;
        snap.train.workers = args.workers;
        return Ok(snap);
    }
    let model = ModelConfig {
        architecture: args.arch,
        dim: args.dim,
        loss_mode: args.mode,
        negatives: args.negatives,
        adam: pctadw::model::AdamConfig {
            learning_rate: args.learning_rate,
            ..Default::default()
        },
        ..ModelConfig::default()
    };
    Ok(TrainSnapshot {
        train: TrainConfig {
            epochs: args.epochs,
            sampler: SamplerConfig {
                walk_length: args.s,
                max_repeats: args.m,
                seed: args.seed,
            },
            model,
            checkpoint_every: args.checkpoint_every,
            checkpoint_path: None,
            workers: args.workers,
        },
        keep_stopwords: args.tokenizer.keep_stopwords,
        min_count: args.tokenizer.min_count,
        resumed_from: args.resume.clone(),
    })
}

/// Loss lines of epochs `1..=epochs` from an existing log.
fn earlier_loss_lines(path: &Path, epochs: usize) -> Vec<String> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    text.lines()
        .skip(1)
        .filter(|line| {
            line.split(',')
                .next()
                .and_then(|e| e.parse::<usize>().ok())
                .is_some_and(|e| e >= 1 && e <= epochs)
        })
        .map(str::to_owned)
        .collect()
}

pub fn run(args: TrainArgs) -> CliResult {
    let snap = snapshot(&args)?;
    let mut config = snap.train.clone();
    let checkpoint = args.out.join(CHECKPOINT_FILE);
    config.checkpoint_path = Some(checkpoint.clone());
    if config.epochs == 0 {
        return usage("--epochs must be at least 1");
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let c = &config;
    println!(
        "config\tarch={} dim={} epochs={} s={} m={} mode={} negatives={} seed={} workers={}",
        c.model.architecture,
        c.model.dim,
        c.epochs,
        c.sampler.walk_length,
        c.sampler.max_repeats,
        c.model.loss_mode,
        c.model.negatives,
        c.sampler.seed,
        c.workers
    );
    if c.workers > 1 {
        warn!(
            "{} workers update parameters without locks; results are not reproducible",
            c.workers
        );
    }

    let tokenizer = TokenizerArgs {
        keep_stopwords: snap.keep_stopwords,
        min_count: snap.min_count,
    };
    let dataset = load_dataset_dir(&args.dir, &tokenizer.config())?;
    let cycles = detect_cycles(&dataset.graph).len();
    if cycles > 0 {
        warn!("training on a graph with {cycles} cycle(s)");
    }
    let mut manifest =
        RunManifest::begin("train", serde_json::to_value(&snap)?, config.sampler.seed).with_dataset(&args.dir)?;
    if let Some(from) = &args.from_manifest {
        let earlier = RunManifest::read(from)?;
        for (file, hash) in &earlier.input_hashes {
            if manifest.input_hashes.get(file) != Some(hash) {
                warn!("{file} differs from the manifest's dataset");
            }
        }
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let total = config.epochs;
    let mut trainer = match &snap.resumed_from {
        Some(path) => {
            manifest = manifest.with_input("resume_checkpoint", path)?;
            Trainer::from_checkpoint(path, &dataset, config)?
        }
        None => Trainer::new(&dataset, config)?,
    };
    let start = trainer.epochs_completed();
    if start > total {
        return Err(anyhow::anyhow!("checkpoint already has {start} epochs, more than --epochs {total}").into());
    }
    info!("{} samples per epoch", trainer.counts().total());
    while trainer.epochs_completed() < total {
        let next = trainer.epochs_completed() + 1;
        trainer.run_until(next)?;
        let loss = trainer.log().last().expect("an epoch just ran");
        info!(
            "epoch {next}: word {:.4} child {:.4} parent {:.4}",
            loss.word, loss.child, loss.parent
        );
        if !loss.is_finite() {
            return Err(anyhow::anyhow!("non-finite loss in epoch {next}").into());
        }
    }
    trainer.save_checkpoint(&checkpoint)?;

    let loss_path = args.out.join(LOSS_FILE);
    let earlier = if start > 0 {
        earlier_loss_lines(&loss_path, start)
    } else {
        Vec::new()
    };
    let mut csv = Vec::new();
    write_loss_csv(trainer.log(), &mut csv)?;
    let mut text = String::from_utf8(csv)?;
    if !earlier.is_empty() {
        let (header, rest) = text.split_once('\n').expect("header line");
        text = format!("{header}\n{}\n{rest}", earlier.join("\n"));
    }
    fs::write(&loss_path, text).with_context(|| format!("writing {}", loss_path.display()))?;

    let vectors = Embeddings::from_model(trainer.model(), &dataset.node_names)?;
    vectors.save_text(&args.out.join(VECTORS_FILE))?;
    manifest.finish(&args.out, &[CHECKPOINT_FILE, LOSS_FILE, VECTORS_FILE])?;
    if let Some(last) = trainer.log().last() {
        println!(
            "final_loss\tword={:.6} child={:.6} parent={:.6}",
            last.word, last.child, last.parent
        );
    }
    println!("wrote\t{}", args.out.display());
    Ok(())
}
