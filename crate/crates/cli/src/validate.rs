use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use pctadw::dataset::{detect_cycles, load_dataset_dir, save_dataset};

use crate::{usage, CliResult, DATASET_ENV};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset directory.
    #[arg(env = DATASET_ENV)]
    dir: PathBuf,
    /// Succeed even if the graph has cycles.
    #[arg(long)]
    allow_cycles: bool,
    /// Drop the edges that close cycles and write the result to this directory.
    #[arg(long, value_name = "OUT_DIR")]
    break_cycles: Option<PathBuf>,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TokenizerArgs {
    /// Keep English stopwords in documents.
    #[arg(long)]
    pub keep_stopwords: bool,
    /// Drop words seen fewer than this many times in the corpus.
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
}

impl TokenizerArgs {
    pub fn config(&self) -> pctadw::TokenizerConfig {
        let base = if self.keep_stopwords {
            pctadw::TokenizerConfig::plain()
        } else {
            pctadw::TokenizerConfig::english()
        };
        base.with_min_count(self.min_count)
    }
}

pub fn run(args: ValidateArgs) -> CliResult {
    if args.break_cycles.as_deref() == Some(args.dir.as_path()) {
        return usage("--break-cycles must name a directory other than the dataset");
    }
    let mut dataset = load_dataset_dir(&args.dir, &args.tokenizer.config())?;
    let graph = &dataset.graph;
    let labeled = (0..dataset.node_count())
        .filter(|&v| dataset.labels.is_labeled(v))
        .count();
    let with_text = dataset.docs.iter().filter(|d| !d.is_empty()).count();
    println!("nodes\t{}", dataset.node_count());
    println!("edges\t{}", graph.edge_count());
    println!("labels\t{}", dataset.labels.label_count());
    println!("labeled_nodes\t{labeled}");
    println!("nodes_with_text\t{with_text}");
    println!("vocabulary\t{}", dataset.vocab.len());

    let cycles = detect_cycles(graph);
    println!("cycles\t{}", cycles.len());
    for cycle in &cycles {
        let names: Vec<&str> = cycle.iter().map(|&v| dataset.node_names[v].as_str()).collect();
        let ids: Vec<String> = cycle.iter().map(|v| v.to_string()).collect();
        println!("cycle\t[{}]\t{}", ids.join(","), names.join(" -> "));
    }

    if let Some(out) = &args.break_cycles {
        let dropped = dataset.break_cycles();
        for (u, v) in &dropped {
            println!("dropped\t{}\t{}", dataset.node_names[*u], dataset.node_names[*v]);
        }
        save_dataset(&dataset, out)?;
        println!("wrote\t{}", out.display());
        return Ok(());
    }
    if !cycles.is_empty() && !args.allow_cycles {
        return Err(anyhow!(
            "graph has {} cycle(s); pass --allow-cycles or --break-cycles",
            cycles.len()
        )
        .into());
    }
    Ok(())
}
