//! Epoch orchestration: sampling, per-sample Adam updates, loss logging and
//! checkpoints.
//!
//! Each epoch `e` draws from streams seeded by `(seed, e)` only, so training
//! four epochs straight through and training two, checkpointing, resuming and
//! training two more produce the same model bit for bit (single worker).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{
    adam_step, init_model, load_checkpoint, sample_loss_and_grads, save_checkpoint, EmbeddingModel, ModelConfig,
    ModelError, NoiseTables,
};
use crate::rng::{self, TAG_EPOCH, TAG_INIT};
use crate::sampler::{compute_walk_counts, epoch_order, SampleStream, SamplerConfig, WalkCounts};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Total epochs to reach.
    pub epochs: usize,
    pub sampler: SamplerConfig,
    pub model: ModelConfig,
    /// Write a checkpoint every this many epochs.
    pub checkpoint_every: Option<usize>,
    pub checkpoint_path: Option<PathBuf>,
    /// 1 is deterministic; more workers update the model without locks.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            sampler: SamplerConfig::default(),
            model: ModelConfig::default(),
            checkpoint_every: None,
            checkpoint_path: None,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_owned()));
        if self.workers == 0 {
            return bad("worker count must be at least 1");
        }
        if self.sampler.walk_length == 0 {
            return bad("walk length s must be at least 1");
        }
        if self.sampler.max_repeats == 0 {
            return bad("repeat cap m must be at least 1");
        }
        if self.checkpoint_every == Some(0) {
            return bad("checkpoint interval must be at least 1");
        }
        if self.checkpoint_every.is_some() && self.checkpoint_path.is_none() {
            return bad("checkpoint interval given without a checkpoint path");
        }
        self.model.validate()?;
        Ok(())
    }
}

/// Mean loss per head over the samples of one epoch where that head was present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    pub samples: usize,
    pub word: f64,
    pub child: f64,
    pub parent: f64,
}

impl EpochLoss {
    pub fn total(&self) -> f64 {
        self.word + self.child + self.parent
    }

    pub fn is_finite(&self) -> bool {
        self.word.is_finite() && self.child.is_finite() && self.parent.is_finite()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct LossTally {
    sums: [f64; 3],
    counts: [usize; 3],
    samples: usize,
}

impl LossTally {
    fn merge(mut self, other: LossTally) -> Self {
        for i in 0..3 {
            self.sums[i] += other.sums[i];
            self.counts[i] += other.counts[i];
        }
        self.samples += other.samples;
        self
    }

    fn finish(self, epoch: usize) -> EpochLoss {
        let mean = |i: usize| {
            if self.counts[i] == 0 {
                0.0
            } else {
                self.sums[i] / self.counts[i] as f64
            }
        };
        EpochLoss {
            epoch,
            samples: self.samples,
            word: mean(0),
            child: mean(1),
            parent: mean(2),
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: EmbeddingModel<f32>,
    pub log: Vec<EpochLoss>,
    pub epochs_completed: usize,
}

struct ModelPtr(*mut EmbeddingModel<f32>);

// SAFETY: lock-free concurrent updates are the point of multi-worker mode;
// torn or lost writes to individual floats are tolerated by the optimizer.
unsafe impl Send for ModelPtr {}
unsafe impl Sync for ModelPtr {}

pub struct Trainer<'d> {
    dataset: &'d Dataset,
    config: TrainConfig,
    counts: WalkCounts,
    noise: NoiseTables,
    model: EmbeddingModel<f32>,
    epochs_completed: usize,
    log: Vec<EpochLoss>,
}

impl<'d> Trainer<'d> {
    /// Fresh model initialised from the master seed.
    pub fn new(dataset: &'d Dataset, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let mut init_rng = rng::stream(config.sampler.seed, TAG_INIT, 0, 0);
        let model = init_model(&config.model, dataset.node_count(), dataset.vocab.len(), &mut init_rng)?;
        Ok(Self::with_model(dataset, config, model, 0))
    }

    /// Restores parameters, moments, step counter and epoch count.
    pub fn from_checkpoint(path: &Path, dataset: &'d Dataset, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let (model, header) = load_checkpoint(path)?;
        header.check_compatible(
            config.model.architecture,
            config.model.dim,
            dataset.node_count(),
            dataset.vocab.len(),
        )?;
        Ok(Self::with_model(
            dataset,
            config,
            model,
            header.epochs_completed as usize,
        ))
    }

    fn with_model(
        dataset: &'d Dataset,
        config: TrainConfig,
        model: EmbeddingModel<f32>,
        epochs_completed: usize,
    ) -> Self {
        let counts = compute_walk_counts(&dataset.graph, &config.sampler);
        let noise = NoiseTables::from_graph(&dataset.graph, &dataset.vocab);
        Self {
            dataset,
            config,
            counts,
            noise,
            model,
            epochs_completed,
            log: Vec::new(),
        }
    }

    pub fn model(&self) -> &EmbeddingModel<f32> {
        &self.model
    }

    pub fn counts(&self) -> &WalkCounts {
        &self.counts
    }

    pub fn log(&self) -> &[EpochLoss] {
        &self.log
    }

    pub fn epochs_completed(&self) -> usize {
        self.epochs_completed
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), TrainError> {
        save_checkpoint(&self.model, self.epochs_completed as u64, path)?;
        Ok(())
    }

    /// Runs epochs until `total` have been completed, checkpointing on the
    /// configured interval.
    pub fn run_until(&mut self, total: usize) -> Result<(), TrainError> {
        while self.epochs_completed < total {
            self.run_epoch()?;
            if let (Some(every), Some(path)) = (self.config.checkpoint_every, &self.config.checkpoint_path) {
                if self.epochs_completed.is_multiple_of(every) {
                    save_checkpoint(&self.model, self.epochs_completed as u64, path)?;
                }
            }
        }
        Ok(())
    }

    pub fn run_epoch(&mut self) -> Result<EpochLoss, TrainError> {
        let epoch = self.epochs_completed as u64;
        let seed = self.config.sampler.seed;
        let order = epoch_order(&self.counts, &mut rng::stream(seed, TAG_EPOCH, epoch, 0));
        let workers = self.config.workers.clamp(1, order.len().max(1));

        let tally = if workers == 1 {
            let mut step = self.model.step;
            let tally = run_chunk(
                &mut self.model,
                self.dataset,
                &self.counts,
                &self.noise,
                &self.config.model,
                order,
                (seed, epoch, 0),
                &mut || {
                    step += 1;
                    step
                },
            )?;
            self.model.step = step;
            tally
        } else {
            let chunk_len = order.len().div_ceil(workers);
            let step = AtomicU64::new(self.model.step);
            let ptr = ModelPtr(&mut self.model);
            let (dataset, counts, noise, model_config) = (self.dataset, &self.counts, &self.noise, &self.config.model);
            let results: Vec<Result<LossTally, ModelError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(chunk_len)
                    .enumerate()
                    .map(|(w, chunk)| {
                        let (ptr, step) = (&ptr, &step);
                        scope.spawn(move || {
                            // SAFETY: see `ModelPtr`; the model outlives the scope.
                            let model = unsafe { &mut *ptr.0 };
                            run_chunk(
                                model,
                                dataset,
                                counts,
                                noise,
                                model_config,
                                chunk.to_vec(),
                                (seed, epoch, w as u64),
                                &mut || step.fetch_add(1, Ordering::Relaxed) + 1,
                            )
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            });
            self.model.step = step.into_inner();
            let mut total = LossTally::default();
            for r in results {
                total = total.merge(r?);
            }
            total
        };

        self.epochs_completed += 1;
        let loss = tally.finish(self.epochs_completed);
        self.log.push(loss);
        Ok(loss)
    }

    pub fn into_outcome(self) -> TrainOutcome {
        TrainOutcome {
            model: self.model,
            log: self.log,
            epochs_completed: self.epochs_completed,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_chunk(
    model: &mut EmbeddingModel<f32>,
    dataset: &Dataset,
    counts: &WalkCounts,
    noise: &NoiseTables,
    config: &ModelConfig,
    order: Vec<usize>,
    (seed, epoch, worker): (u64, u64, u64),
    next_step: &mut dyn FnMut() -> u64,
) -> Result<LossTally, ModelError> {
    let sample_rng = rng::stream(seed, TAG_EPOCH, epoch, 1 + 2 * worker);
    let mut noise_rng = rng::stream(seed, TAG_EPOCH, epoch, 2 + 2 * worker);
    let mut tally = LossTally::default();
    for sample in SampleStream::new(&dataset.graph, &dataset.docs, counts, order, sample_rng) {
        let (loss, grads) = sample_loss_and_grads(model, &sample, config, noise, &mut noise_rng)?;
        adam_step(model, &grads, next_step(), &config.adam);
        for (i, head) in [loss.word, loss.child, loss.parent].into_iter().enumerate() {
            if let Some(l) = head {
                tally.sums[i] += l;
                tally.counts[i] += 1;
            }
        }
        tally.samples += 1;
    }
    Ok(tally)
}

/// Trains a fresh model for `config.epochs` epochs.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if config.epochs == 0 {
        return Err(TrainError::Config("epochs must be at least 1".into()));
    }
    let mut trainer = Trainer::new(dataset, config.clone())?;
    trainer.run_until(config.epochs)?;
    Ok(trainer.into_outcome())
}

/// Continues from a checkpoint until `config.epochs` epochs are completed in total.
pub fn resume(checkpoint: &Path, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let mut trainer = Trainer::from_checkpoint(checkpoint, dataset, config.clone())?;
    if trainer.epochs_completed() > config.epochs {
        return Err(TrainError::Config(format!(
            "checkpoint has {} epochs, more than the requested total of {}",
            trainer.epochs_completed(),
            config.epochs
        )));
    }
    trainer.run_until(config.epochs)?;
    Ok(trainer.into_outcome())
}

/// `epoch,word_loss,child_loss,parent_loss` CSV.
pub fn write_loss_csv<W: Write>(log: &[EpochLoss], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,word_loss,child_loss,parent_loss")?;
    for e in log {
        writeln!(w, "{},{},{},{}", e.epoch, e.word, e.child, e.parent)?;
    }
    w.flush()
}
