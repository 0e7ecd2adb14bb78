use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use pctadw::dataset::load_dataset_dir;
use pctadw::eval::{
    analogy_all_pairs, analogy_with_anchor, classify as run_classify, pca_project, Distance, LogRegConfig,
    TRAINING_FRACTIONS,
};
use pctadw::model::{load_checkpoint, CHECKPOINT_MAGIC};
use pctadw::{Dataset, Embeddings};
use serde_json::json;

use crate::manifest::RunManifest;
use crate::validate::TokenizerArgs;
use crate::{usage, CliResult, DatasetArg};

#[derive(Debug, Args)]
pub struct VectorsArg {
    /// A training checkpoint or a word2vec-style text file of node vectors.
    vectors: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    input: VectorsArg,
    #[command(flatten)]
    dataset: DatasetArg,
    /// Output directory for classification.csv and classification.json.
    #[arg(long)]
    out: PathBuf,
    /// Training fractions (each in (0, 0.5]); defaults to the six standard ones.
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Gradient-descent epochs of each per-label classifier.
    #[arg(long, default_value_t = 100)]
    classifier_epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    classifier_learning_rate: f64,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

#[derive(Debug, Args)]
pub struct AnalogyArgs {
    #[command(flatten)]
    input: VectorsArg,
    /// Needed to name the rows of a checkpoint.
    #[command(flatten)]
    dataset: DatasetArg,
    /// TSV of node pairs `a<TAB>b`, one per line.
    #[arg(long)]
    pairs: PathBuf,
    /// Use this pair as `(a1, a2)` for every query instead of all ordered pairs.
    #[arg(long, num_args = 2, value_names = ["A1", "A2"])]
    anchor: Option<Vec<String>>,
    #[arg(long, default_value = "euclidean")]
    metric: Distance,
    /// Output directory for analogy.csv, analogy_histogram.csv and analogy.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    input: VectorsArg,
    /// Needed to name the rows of a checkpoint.
    #[command(flatten)]
    dataset: DatasetArg,
    /// Output directory for embeddings.txt, pca.tsv and pca.json.
    #[arg(long)]
    out: PathBuf,
    /// Number of principal components in pca.tsv.
    #[arg(long, default_value_t = 2)]
    pca_dim: usize,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

fn is_checkpoint(path: &Path) -> anyhow::Result<bool> {
    let mut magic = [0u8; 8];
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut read = 0;
    while read < magic.len() {
        match file.read(&mut magic[read..])? {
            0 => break,
            n => read += n,
        }
    }
    Ok(read == magic.len() && &magic == CHECKPOINT_MAGIC)
}

fn load_data(dataset: &DatasetArg, tokenizer: &TokenizerArgs) -> CliResult<Option<(PathBuf, Dataset)>> {
    match &dataset.dir {
        Some(dir) => Ok(Some((dir.clone(), load_dataset_dir(dir, &tokenizer.config())?))),
        None => Ok(None),
    }
}

/// Vectors from a checkpoint (rows named by the dataset) or a text file.
fn load_vectors(path: &Path, dataset: Option<&Dataset>) -> CliResult<Embeddings> {
    if is_checkpoint(path)? {
        let Some(dataset) = dataset else {
            return usage("a checkpoint has no node names; pass --dataset");
        };
        let (model, _) = load_checkpoint(path)?;
        if model.node_count() != dataset.node_count() {
            return Err(anyhow!(
                "checkpoint has {} nodes but the dataset has {}",
                model.node_count(),
                dataset.node_count()
            )
            .into());
        }
        Ok(Embeddings::from_model(&model, &dataset.node_names)?)
    } else {
        Ok(Embeddings::load_text(path).with_context(|| format!("reading {}", path.display()))?)
    }
}

fn create(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write(path: PathBuf, text: String) -> anyhow::Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn begin(
    command: &str,
    config: serde_json::Value,
    seed: u64,
    vectors: &Path,
    dataset: Option<&Path>,
) -> anyhow::Result<RunManifest> {
    let manifest = RunManifest::begin(command, config, seed).with_input("vectors", vectors)?;
    match dataset {
        Some(dir) => manifest.with_dataset(dir),
        None => Ok(manifest),
    }
}

pub fn classify(args: ClassifyArgs) -> CliResult {
    let Some((dir, dataset)) = load_data(&args.dataset, &args.tokenizer)? else {
        return usage("classification needs labels; pass --dataset or set the dataset environment variable");
    };
    let fractions = if args.fractions.is_empty() {
        TRAINING_FRACTIONS.to_vec()
    } else {
        args.fractions.clone()
    };
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 0.5)) {
        return usage(format!("training fraction {f} outside (0, 0.5]"));
    }
    let config = LogRegConfig {
        learning_rate: args.classifier_learning_rate,
        epochs: args.classifier_epochs,
        ..LogRegConfig::default()
    };
    let vectors = load_vectors(&args.input.vectors, Some(&dataset))?.aligned_to(&dataset.node_names)?;
    let manifest = begin(
        "classify",
        json!({ "fractions": fractions, "classifier": config }),
        args.seed,
        &args.input.vectors,
        Some(&dir),
    )?;
    let report = run_classify(&vectors, &dataset.labels, &fractions, &config, args.seed)?;

    create(&args.out)?;
    write(args.out.join("classification.csv"), report.to_csv())?;
    let summary: Vec<_> = report
        .fractions
        .iter()
        .map(|f| json!({ "fraction": f.fraction, "folds": f.folds, "micro_f1": f.micro_f1 }))
        .collect();
    write(
        args.out.join("classification.json"),
        serde_json::to_string_pretty(&json!({ "fractions": summary }))? + "\n",
    )?;
    manifest.finish(&args.out, &["classification.csv", "classification.json"])?;
    println!("fraction\tfolds\tmicro_f1");
    for f in &report.fractions {
        println!("{}\t{}\t{:.4}", f.fraction, f.folds, f.micro_f1);
    }
    Ok(())
}

fn read_pairs(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| match line.split('\t').collect::<Vec<_>>().as_slice() {
            [a, b] => Ok((a.trim().to_owned(), b.trim().to_owned())),
            _ => Err(anyhow!("{}:{}: expected `a<TAB>b`", path.display(), i + 1)),
        })
        .collect()
}

pub fn analogy(args: AnalogyArgs) -> CliResult {
    let data = load_data(&args.dataset, &args.tokenizer)?;
    let vectors = load_vectors(&args.input.vectors, data.as_ref().map(|(_, d)| d))?;
    let pairs = read_pairs(&args.pairs)?;
    let anchor = args.anchor.as_ref().map(|a| (a[0].as_str(), a[1].as_str()));
    let min_pairs = if anchor.is_some() { 1 } else { 2 };
    if pairs.len() < min_pairs {
        return usage(format!("{} needs at least {min_pairs} pair(s)", args.pairs.display()));
    }
    let manifest = begin(
        "analogy",
        json!({ "metric": args.metric, "anchor": args.anchor, "pairs": pairs.len() }),
        0,
        &args.input.vectors,
        data.as_ref().map(|(dir, _)| dir.as_path()),
    )?
    .with_input("pairs", &args.pairs)?;
    let result = match anchor {
        Some(anchor) => analogy_with_anchor(&vectors, &pairs, anchor, args.metric)?,
        None => analogy_all_pairs(&vectors, &pairs, args.metric)?,
    };

    create(&args.out)?;
    write(args.out.join("analogy.csv"), result.to_csv())?;
    let mut hist = String::from("rank,cumulative\n");
    for (rank, count) in result.histogram() {
        hist.push_str(&format!("{rank},{count}\n"));
    }
    write(args.out.join("analogy_histogram.csv"), hist)?;
    let mut ranks = result.ranks();
    ranks.sort_unstable();
    let median = ranks.get(ranks.len() / 2).copied();
    let summary = json!({
        "tests": result.tests.len(),
        "node_count": result.node_count,
        "median_rank": median,
        "rank_1": result.cumulative(1),
        "rank_10": result.cumulative(10),
        "rank_100": result.cumulative(100),
    });
    write(
        args.out.join("analogy.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    manifest.finish(&args.out, &["analogy.csv", "analogy_histogram.csv", "analogy.json"])?;
    println!("tests\t{}", result.tests.len());
    if let Some(m) = median {
        println!("median_rank\t{m}");
    }
    println!("rank_1\t{}", result.cumulative(1));
    println!("rank_10\t{}", result.cumulative(10));
    Ok(())
}

pub fn export(args: ExportArgs) -> CliResult {
    let data = load_data(&args.dataset, &args.tokenizer)?;
    let vectors = load_vectors(&args.input.vectors, data.as_ref().map(|(_, d)| d))?;
    if args.pca_dim == 0 || args.pca_dim > vectors.dim() {
        return usage(format!("--pca-dim must be between 1 and {}", vectors.dim()));
    }
    let manifest = begin(
        "export",
        json!({ "pca_dim": args.pca_dim }),
        0,
        &args.input.vectors,
        data.as_ref().map(|(dir, _)| dir.as_path()),
    )?;
    let projection = pca_project(&vectors, args.pca_dim)?;

    create(&args.out)?;
    vectors.save_text(&args.out.join("embeddings.txt"))?;
    write(args.out.join("pca.tsv"), projection.to_tsv(vectors.names()))?;
    let summary = json!({
        "explained_variance": projection.explained_variance,
        "components": projection.components,
    });
    write(
        args.out.join("pca.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    manifest.finish(&args.out, &["embeddings.txt", "pca.tsv", "pca.json"])?;
    println!("vectors\t{}", vectors.len());
    println!("dim\t{}", vectors.dim());
    Ok(())
}
