//! Fixtures and independent reference computations shared by the integration tests.
#![allow(
    dead_code,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pctadw::dataset::{load_dataset_dir, DirectedGraph};
use pctadw::model::{NegativeDraws, ParamBlock};
use pctadw::{Architecture, Dataset, EmbeddingModel, TokenizerConfig, TrainingSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every parameter uniform in `[-scale, scale]`.
pub fn random_model(
    arch: Architecture,
    dim: usize,
    nodes: usize,
    vocab: usize,
    scale: f64,
    seed: u64,
) -> EmbeddingModel<f64> {
    let mut model = EmbeddingModel::<f64>::zeros(arch, dim, nodes, vocab).unwrap();
    let mut r = rng(seed);
    for block in ParamBlock::ALL {
        for x in model.block_mut(block).as_mut_slice() {
            *x = r.random_range(-scale..=scale);
        }
    }
    model
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_sigmoid(z: f64) -> f64 {
    -(1.0 + (-z).exp()).ln()
}

/// Slices of the input row each head reads: (word, child head, parent head).
fn head_inputs(model: &EmbeddingModel<f64>, v: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let row = model.block(ParamBlock::Input).row(v).to_vec();
    match model.architecture() {
        Architecture::Pctadw1 => (row.clone(), row.clone(), row),
        Architecture::Pctadw2 => {
            let h = row.len() / 2;
            let (v_c, v_p) = (row[..h].to_vec(), row[h..].to_vec());
            (row, v_p, v_c)
        }
    }
}

fn head_loss(out: &[Vec<f64>], x: &[f64], target: usize, negatives: Option<&[usize]>) -> f64 {
    match negatives {
        None => {
            let z: Vec<f64> = out.iter().map(|w| dot(w, x)).collect();
            let log_sum = z.iter().map(|zj| zj.exp()).sum::<f64>().ln();
            log_sum - z[target]
        }
        Some(noise) => {
            let mut loss = -log_sigmoid(dot(&out[target], x));
            for &n in noise {
                if n != target {
                    loss -= log_sigmoid(-dot(&out[n], x));
                }
            }
            loss
        }
    }
}

fn rows(model: &EmbeddingModel<f64>, block: ParamBlock) -> Vec<Vec<f64>> {
    let m = model.block(block);
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Sample loss written directly from the model definition: negative log
/// softmax (or the negative-sampling surrogate) of each present head.
pub fn reference_loss(model: &EmbeddingModel<f64>, sample: &TrainingSample, negatives: Option<&NegativeDraws>) -> f64 {
    let (x_word, x_child, x_parent) = head_inputs(model, sample.focus);
    let mut loss = 0.0;
    if let Some(w) = sample.word {
        loss += head_loss(
            &rows(model, ParamBlock::WordOut),
            &x_word,
            w,
            negatives.map(|d| d.word.as_slice()),
        );
    }
    if let Some(c) = sample.child {
        loss += head_loss(
            &rows(model, ParamBlock::ChildOut),
            &x_child,
            c,
            negatives.map(|d| d.child.as_slice()),
        );
    }
    if let Some(p) = sample.parent {
        loss += head_loss(
            &rows(model, ParamBlock::ParentOut),
            &x_parent,
            p,
            negatives.map(|d| d.parent.as_slice()),
        );
    }
    loss
}

/// Dense softmax over `out` rows against `x`.
pub fn reference_softmax(out: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let z: Vec<f64> = out.iter().map(|w| dot(w, x)).collect();
    let sum: f64 = z.iter().map(|zj| zj.exp()).sum();
    z.iter().map(|zj| zj.exp() / sum).collect()
}

/// `(1/s) * sum_{i=1..s} (A^i)[v, :]` with `A` the row-normalised adjacency of
/// `next`. Exact for walks that never hit a dead end.
pub fn matrix_power_law(n: usize, next: &dyn Fn(usize) -> Vec<usize>, v: usize, s: usize) -> Vec<f64> {
    let mut a = vec![vec![0.0; n]; n];
    for (mu, row) in a.iter_mut().enumerate() {
        let nbrs = next(mu);
        for &nu in &nbrs {
            row[nu] = 1.0 / nbrs.len() as f64;
        }
    }
    let mut power = vec![0.0; n];
    power[v] = 1.0;
    let mut total = vec![0.0; n];
    for _ in 0..s {
        let mut nextp = vec![0.0; n];
        for (mu, &p) in power.iter().enumerate() {
            for (nu, &w) in a[mu].iter().enumerate() {
                nextp[nu] += p * w;
            }
        }
        power = nextp;
        for (t, p) in total.iter_mut().zip(&power) {
            *t += p / s as f64;
        }
    }
    total
}

/// Exhaustive enumeration of all walks of up to `s` steps from `v` (stopping
/// at dead ends), each contributing the uniform pick over its visited nodes
/// other than `v`. Returns the pick distribution and the probability that the
/// walk yields nothing.
pub fn enumerated_walk_law(n: usize, next: &dyn Fn(usize) -> Vec<usize>, v: usize, s: usize) -> (Vec<f64>, f64) {
    fn go(
        next: &dyn Fn(usize) -> Vec<usize>,
        v: usize,
        cur: usize,
        left: usize,
        p: f64,
        path: &mut Vec<usize>,
        law: &mut [f64],
        none: &mut f64,
    ) {
        let nbrs = next(cur);
        if left == 0 || nbrs.is_empty() {
            if path.is_empty() {
                *none += p;
            } else {
                for &u in path.iter() {
                    law[u] += p / path.len() as f64;
                }
            }
            return;
        }
        for &u in &nbrs {
            let pushed = u != v;
            if pushed {
                path.push(u);
            }
            go(next, v, u, left - 1, p / nbrs.len() as f64, path, law, none);
            if pushed {
                path.pop();
            }
        }
    }
    let mut law = vec![0.0; n];
    let mut none = 0.0;
    go(next, v, v, s, 1.0, &mut Vec::new(), &mut law, &mut none);
    (law, none)
}

pub fn out_fn(g: &DirectedGraph) -> impl Fn(usize) -> Vec<usize> + '_ {
    |x| g.out_neighbors(x).to_vec()
}

pub fn in_fn(g: &DirectedGraph) -> impl Fn(usize) -> Vec<usize> + '_ {
    |x| g.in_neighbors(x).to_vec()
}

/// `k` standard deviations of a binomial count with `trials` and `p`, plus
/// one count of slack for p near 0 or 1.
pub fn binomial_bound(trials: f64, p: f64, k: f64) -> f64 {
    k * (trials * p * (1.0 - p)).sqrt() + 1.0
}

/// Writes the three TSV files. `docs` and `labels` are `(node, text)` lines.
pub fn write_dataset(
    dir: &Path,
    edges: &[(String, String)],
    isolated: &[String],
    docs: &[(String, String)],
    labels: &[(String, String)],
) {
    let mut e = String::new();
    for (u, v) in edges {
        writeln!(e, "{u}\t{v}").unwrap();
    }
    for v in isolated {
        writeln!(e, "{v}").unwrap();
    }
    fs::write(dir.join("edges.tsv"), e).unwrap();
    let join = |lines: &[(String, String)]| lines.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect::<String>();
    fs::write(dir.join("docs.tsv"), join(docs)).unwrap();
    fs::write(dir.join("labels.tsv"), join(labels)).unwrap();
}

pub fn load(dir: &Path) -> Dataset {
    load_dataset_dir(dir, &TokenizerConfig::plain()).unwrap()
}

/// Two communities of `per_side` nodes. Each node links to `degree` random
/// nodes of its own community and, with probability 0.05, to one node of the
/// other; documents draw 20 tokens from a community vocabulary mixed with a
/// shared one; the label is the community.
pub fn two_communities(dir: &Path, per_side: usize, degree: usize, seed: u64) {
    let mut r = rng(seed);
    let name = |c: usize, i: usize| format!("{}{i:03}", ["red", "blue"][c]);
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for c in 0..2 {
        for i in 0..per_side {
            let mut targets = Vec::new();
            while targets.len() < degree {
                let j = r.random_range(0..per_side);
                if j != i && !targets.contains(&j) {
                    targets.push(j);
                }
            }
            for j in targets {
                if seen.insert((c, i, c, j)) {
                    edges.push((name(c, i), name(c, j)));
                }
            }
            if r.random_bool(0.05) {
                let j = r.random_range(0..per_side);
                if seen.insert((c, i, 1 - c, j)) {
                    edges.push((name(c, i), name(1 - c, j)));
                }
            }
        }
    }
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2 {
        for i in 0..per_side {
            let words: Vec<String> = (0..20)
                .map(|_| {
                    if r.random_bool(0.7) {
                        format!("{}word{}", ["alpha", "beta"][c], r.random_range(0..30))
                    } else {
                        format!("common{}", r.random_range(0..30))
                    }
                })
                .collect();
            docs.push((name(c, i), words.join(" ")));
            labels.push((name(c, i), ["red", "blue"][c].to_string()));
        }
    }
    write_dataset(dir, &edges, &[], &docs, &labels);
}

/// The fixed 6-node DAG used by the sampling-law checks. Walks of two steps
/// from nodes 0 and 1 never stop early, nor do reverse walks from 4 and 5.
pub const SAMPLING_DAG: [(usize, usize); 9] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (2, 5), (3, 4), (3, 5)];

pub fn sampling_dag() -> DirectedGraph {
    DirectedGraph::from_edges(6, SAMPLING_DAG.to_vec()).unwrap()
}

/// Largest relative error between the analytic gradient and central finite
/// differences of [`reference_loss`] over every parameter of every block.
/// Relative error is `|a - f| / max(|a|, |f|, floor)`.
pub fn gradient_check(
    model: &EmbeddingModel<f64>,
    sample: &TrainingSample,
    draws: Option<&NegativeDraws>,
    h: f64,
    floor: f64,
) -> f64 {
    use pctadw::model::{loss_and_grads, Objective};
    let objective = match draws {
        Some(d) => Objective::Sampled(d),
        None => Objective::Exact,
    };
    let (loss, grads) = loss_and_grads(model, sample, objective).unwrap();
    assert!((loss.total() - reference_loss(model, sample, draws)).abs() < 1e-10);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for block in ParamBlock::ALL {
        let (rows, cols) = (model.block(block).rows(), model.block(block).cols());
        for r in 0..rows {
            for c in 0..cols {
                let original = model.block(block).row(r)[c];
                probe.block_mut(block).row_mut(r)[c] = original + h;
                let plus = reference_loss(&probe, sample, draws);
                probe.block_mut(block).row_mut(r)[c] = original - h;
                let minus = reference_loss(&probe, sample, draws);
                probe.block_mut(block).row_mut(r)[c] = original;
                let fd = (plus - minus) / (2.0 * h);
                let analytic = grads.value(block, r, c);
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(floor);
                worst = worst.max(rel);
            }
        }
    }
    worst
}

/// Runs `epochs` epochs on [`SAMPLING_DAG`] with `s = 2` and compares child
/// counts (nodes 0, 1) and parent counts (nodes 4, 5) against `t_v` times the
/// matrix-power law, within `sigmas` binomial standard deviations. Returns the
/// largest deviation in sigmas.
pub fn check_sampling_law(epochs: usize, sigmas: f64, seed: u64) -> Result<f64, String> {
    use pctadw::sampler::{compute_walk_counts, epoch_samples};
    use pctadw::SamplerConfig;
    let g = sampling_dag();
    let config = SamplerConfig {
        walk_length: 2,
        max_repeats: 5,
        seed,
    };
    let counts = compute_walk_counts(&g, &config);
    let mut child = vec![vec![0u64; 6]; 6];
    let mut parent = vec![vec![0u64; 6]; 6];
    for e in 0..epochs {
        let r = pctadw::rng::stream(seed, pctadw::rng::TAG_EPOCH, e as u64, 0);
        for s in epoch_samples(&g, &[], &counts, r) {
            if let Some(c) = s.child {
                child[s.focus][c] += 1;
            }
            if let Some(p) = s.parent {
                parent[s.focus][p] += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    let checks: [(&[usize], &Vec<Vec<u64>>, &dyn Fn(usize) -> Vec<usize>, &str); 2] = [
        (&[0, 1], &child, &out_fn(&g), "child"),
        (&[4, 5], &parent, &in_fn(&g), "parent"),
    ];
    for (nodes, observed, next, head) in checks {
        for &v in nodes {
            let trials = (epochs * counts.repeats[v]) as f64;
            let law = matrix_power_law(6, next, v, 2);
            for u in 0..6 {
                let expected = trials * law[u];
                let dev = (observed[v][u] as f64 - expected).abs();
                let sd = (trials * law[u] * (1.0 - law[u])).sqrt();
                if dev > binomial_bound(trials, law[u], sigmas) {
                    return Err(format!(
                        "{head} of {v} -> {u}: observed {} expected {expected:.1}",
                        observed[v][u]
                    ));
                }
                if sd > 0.0 {
                    worst = worst.max(dev / sd);
                }
            }
        }
    }
    Ok(worst)
}

/// Three-node path `0 -> 1 -> 2` with documents `a a b`, `c`, `a b b b c`.
/// Compares `(v, word)` sample counts with `t_v * count / length`.
pub fn check_word_law(epochs: usize, sigmas: f64, seed: u64) -> Result<f64, String> {
    use pctadw::sampler::{compute_walk_counts, epoch_samples};
    use pctadw::SamplerConfig;
    let dir = tempfile::tempdir().unwrap();
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let n = names(&["n0", "n1", "n2"]);
    let docs: Vec<(String, String)> = n.iter().cloned().zip(names(&["a a b", "c", "a b b b c"])).collect();
    write_dataset(
        dir.path(),
        &[(n[0].clone(), n[1].clone()), (n[1].clone(), n[2].clone())],
        &[],
        &docs,
        &[],
    );
    let ds = load(dir.path());
    let config = SamplerConfig {
        walk_length: 2,
        max_repeats: 5,
        seed,
    };
    let counts = compute_walk_counts(&ds.graph, &config);
    let vocab = ds.vocab.len();
    let mut observed = vec![vec![0u64; vocab]; 3];
    for e in 0..epochs {
        let r = pctadw::rng::stream(seed, pctadw::rng::TAG_EPOCH, e as u64, 0);
        for s in epoch_samples(&ds.graph, &ds.docs, &counts, r) {
            observed[s.focus][s.word.expect("every node has text")] += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for v in 0..3 {
        let trials = (epochs * counts.repeats[v]) as f64;
        let doc = &ds.docs[v];
        for w in 0..vocab {
            let p = doc.count(w) as f64 / doc.len() as f64;
            let dev = (observed[v][w] as f64 - trials * p).abs();
            if dev > binomial_bound(trials, p, sigmas) {
                return Err(format!(
                    "node {v} word {}: observed {} expected {:.1}",
                    ds.vocab.word(w),
                    observed[v][w],
                    trials * p
                ));
            }
            let sd = (trials * p * (1.0 - p)).sqrt();
            if sd > 0.0 {
                worst = worst.max(dev / sd);
            }
        }
    }
    Ok(worst)
}

pub fn small_config(
    arch: Architecture,
    mode: pctadw::LossMode,
    dim: usize,
    epochs: usize,
    seed: u64,
) -> pctadw::TrainConfig {
    pctadw::TrainConfig {
        epochs,
        sampler: pctadw::SamplerConfig {
            walk_length: 2,
            max_repeats: 5,
            seed,
        },
        model: pctadw::ModelConfig {
            architecture: arch,
            dim,
            loss_mode: mode,
            ..pctadw::ModelConfig::default()
        },
        ..pctadw::TrainConfig::default()
    }
}

/// Two identical single-worker runs give identical checkpoint bytes, and
/// 2 epochs + checkpoint + resume to 4 equals 4 straight epochs.
pub fn check_determinism(arch: Architecture, mode: pctadw::LossMode) -> Result<(), String> {
    use pctadw::model::save_checkpoint;
    use pctadw::trainer::{resume, train};
    let dir = tempfile::tempdir().unwrap();
    two_communities(dir.path(), 20, 3, 4);
    let ds = load(dir.path());
    let config = small_config(arch, mode, 8, 4, 99);
    let bytes = |outcome: &pctadw::TrainOutcome, name: &str| {
        let path = dir.path().join(name);
        save_checkpoint(&outcome.model, outcome.epochs_completed as u64, &path).unwrap();
        fs::read(path).unwrap()
    };
    let first = bytes(&train(&ds, &config).map_err(|e| e.to_string())?, "a.ckpt");
    let second = bytes(&train(&ds, &config).map_err(|e| e.to_string())?, "b.ckpt");
    if first != second {
        return Err("repeated runs differ".into());
    }
    let half = pctadw::TrainConfig {
        epochs: 2,
        ..config.clone()
    };
    bytes(&train(&ds, &half).map_err(|e| e.to_string())?, "half.ckpt");
    let resumed = resume(&dir.path().join("half.ckpt"), &ds, &config).map_err(|e| e.to_string())?;
    if resumed.log.len() != 2 {
        return Err(format!("resume ran {} epochs", resumed.log.len()));
    }
    if bytes(&resumed, "resumed.ckpt") != first {
        return Err("resumed run differs from straight run".into());
    }
    Ok(())
}

/// For every combination of missing heads, one update leaves the output
/// block and moments of each missing head bitwise unchanged, leaves the
/// input slices read only by missing heads unchanged, and yields a finite loss.
pub fn check_skipped_head_isolation() -> Result<usize, String> {
    use pctadw::model::{adam_step, loss_and_grads, AdamConfig, NoiseTables, Objective};
    let mut checked = 0;
    for arch in [Architecture::Pctadw1, Architecture::Pctadw2] {
        for exact in [true, false] {
            for mask in 0..8u8 {
                let mut model = random_model(arch, 6, 5, 4, 0.5, mask as u64).cast::<f32>();
                let before = model.clone();
                let sample = TrainingSample {
                    focus: 2,
                    word: (mask & 1 != 0).then_some(3),
                    child: (mask & 2 != 0).then_some(4),
                    parent: (mask & 4 != 0).then_some(0),
                };
                let noise = NoiseTables::new(&[1, 2, 3, 4], &[1; 5], &[1; 5]);
                let draws = noise.draw(&sample, 5, &mut rng(mask as u64));
                let objective = if exact {
                    Objective::Exact
                } else {
                    Objective::Sampled(&draws)
                };
                let (loss, grads) = loss_and_grads(&model, &sample, objective).map_err(|e| e.to_string())?;
                if !loss.total().is_finite() {
                    return Err(format!("{arch} mask {mask}: non-finite loss"));
                }
                adam_step(&mut model, &grads, 1, &AdamConfig::default());
                let mut frozen = Vec::new();
                if sample.word.is_none() {
                    frozen.push(ParamBlock::WordOut);
                }
                if sample.child.is_none() {
                    frozen.push(ParamBlock::ChildOut);
                }
                if sample.parent.is_none() {
                    frozen.push(ParamBlock::ParentOut);
                }
                for b in frozen {
                    if model.block(b) != before.block(b) || model.moments(b) != before.moments(b) {
                        return Err(format!("{arch} mask {mask}: {b:?} changed"));
                    }
                }
                let row = model.block(ParamBlock::Input).row(2);
                let old = before.block(ParamBlock::Input).row(2);
                let untouched_input = match arch {
                    _ if mask == 0 => Some(0..6),
                    Architecture::Pctadw2 if mask == 2 => Some(0..3),
                    Architecture::Pctadw2 if mask == 4 => Some(3..6),
                    _ => None,
                };
                if let Some(r) = untouched_input {
                    if row[r.clone()] != old[r.clone()] {
                        return Err(format!("{arch} mask {mask}: input columns {r:?} changed"));
                    }
                }
                for v in [0, 1, 3, 4] {
                    if model.block(ParamBlock::Input).row(v) != before.block(ParamBlock::Input).row(v) {
                        return Err(format!("{arch} mask {mask}: input row {v} changed"));
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Trains on a fixture where some nodes lack text, parents or children and
/// one node has nothing at all, and checks every logged loss is finite and
/// the empty node's input row never moves.
pub fn check_skipped_heads_in_training() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let s = |x: &str| x.to_string();
    let edges = vec![(s("src"), s("mid")), (s("mid"), s("sink")), (s("src"), s("sink"))];
    let docs = vec![(s("src"), s("alpha beta")), (s("sink"), s("gamma"))];
    write_dataset(dir.path(), &edges, &[s("alone")], &docs, &[]);
    let ds = load(dir.path());
    let alone = ds.node_index["alone"];
    for arch in [Architecture::Pctadw1, Architecture::Pctadw2] {
        for mode in [pctadw::LossMode::ExactSoftmax, pctadw::LossMode::NegativeSampling] {
            let config = small_config(arch, mode, 4, 5, 1);
            let mut trainer = pctadw::trainer::Trainer::new(&ds, config).map_err(|e| e.to_string())?;
            let before = trainer.model().block(ParamBlock::Input).row(alone).to_vec();
            trainer.run_until(5).map_err(|e| e.to_string())?;
            if trainer.log().iter().any(|e| !e.is_finite()) {
                return Err(format!("{arch} {mode}: non-finite loss"));
            }
            if trainer.model().block(ParamBlock::Input).row(alone) != before.as_slice() {
                return Err(format!("{arch} {mode}: untrained node moved"));
            }
        }
    }
    Ok(())
}

/// Trains the two-community fixture and returns the 10% micro-F1.
pub fn end_to_end_micro_f1(seed: u64) -> Result<f64, String> {
    use pctadw::eval::{classify, LogRegConfig};
    let dir = tempfile::tempdir().unwrap();
    two_communities(dir.path(), 100, 6, seed);
    let ds = load(dir.path());
    if ds.node_count() != 200 {
        return Err(format!("fixture has {} nodes", ds.node_count()));
    }
    let config = small_config(Architecture::Pctadw2, pctadw::LossMode::NegativeSampling, 32, 50, seed);
    let outcome = pctadw::trainer::train(&ds, &config).map_err(|e| e.to_string())?;
    if outcome.log.iter().any(|e| !e.is_finite()) {
        return Err("non-finite loss".into());
    }
    let reps = pctadw::Embeddings::from_model(&outcome.model, &ds.node_names).map_err(|e| e.to_string())?;
    let report = classify(&reps, &ds.labels, &[0.10], &LogRegConfig::default(), seed).map_err(|e| e.to_string())?;
    Ok(report.fractions[0].micro_f1)
}

/// One-hot label vectors scored at the six standard fractions.
pub fn one_hot_report(labels_per_class: usize, classes: usize) -> pctadw::eval::ClassificationReport {
    use pctadw::eval::{classify, LogRegConfig, TRAINING_FRACTIONS};
    use pctadw::LabelSet;
    let n = labels_per_class * classes;
    let rows: Vec<Vec<usize>> = (0..n).map(|v| vec![v % classes]).collect();
    let labels = LabelSet::from_ids(classes, &rows);
    let reps: Vec<Vec<f32>> = (0..n)
        .map(|v| (0..classes).map(|c| if c == v % classes { 1.0 } else { 0.0 }).collect())
        .collect();
    classify(
        &pctadw::Embeddings::from_rows(&reps),
        &labels,
        &TRAINING_FRACTIONS,
        &LogRegConfig::default(),
        7,
    )
    .unwrap()
}

/// Rank of `b2` by sorting every candidate except `a1, a2, b1` on
/// `(distance, index)` and finding its position.
pub fn sorted_rank(rows: &[Vec<f64>], a1: usize, a2: usize, b1: usize, b2: usize, cosine: bool) -> usize {
    let q: Vec<f64> = (0..rows[0].len())
        .map(|i| rows[a2][i] - rows[a1][i] + rows[b1][i])
        .collect();
    let dist = |x: &[f64]| {
        if cosine {
            let (nx, nq) = (dot(x, x).sqrt(), dot(&q, &q).sqrt());
            if nx * nq == 0.0 {
                1.0
            } else {
                1.0 - dot(x, &q) / (nx * nq)
            }
        } else {
            x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        }
    };
    let mut candidates: Vec<(f64, usize)> = (0..rows.len())
        .filter(|&c| c != a1 && c != a2 && c != b1)
        .map(|c| (dist(&rows[c]), c))
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    1 + candidates.iter().position(|&(_, c)| c == b2).unwrap()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Planted fixture: four nodes forming an exact parallelogram among random
/// decoys far from the query. Returns `(reps, a1, a2, b1, b2)` by name.
pub fn planted_parallelogram(seed: u64) -> pctadw::Embeddings {
    let mut r = rng(seed);
    let dim = 8;
    let base: Vec<f32> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let offset: Vec<f32> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let other: Vec<f32> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut rows = vec![
        base.clone(),
        base.iter().zip(&offset).map(|(a, b)| a + b).collect(),
        other.clone(),
        other.iter().zip(&offset).map(|(a, b)| a + b).collect(),
    ];
    for _ in 0..30 {
        rows.push(
            (0..dim)
                .map(|_| r.random_range(5.0..10.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect(),
        );
    }
    let names = ["a1", "a2", "b1", "b2"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..30).map(|i| format!("decoy{i}")))
        .collect();
    pctadw::Embeddings::new(names, dim, rows.concat()).unwrap()
}
