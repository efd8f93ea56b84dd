//! Joint image/audio loss, dataset splitting, and the Adam training loop.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{self, AudioClip, DEFAULT_SAMPLE_RATE};
use crate::codec::{Method, SecretCodec};
use crate::error::{Result, StegoError};
use crate::image_io;
use crate::net::{save_weights, Architecture, NetworkConfig, StegoNet, Tape};
use crate::spectral::StftParams;
use crate::tensor::{PlanarTensor, Real};

/// Trade-off between container fidelity (`alpha`) and revealed-audio
/// fidelity (`beta`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    alpha: f64,
    beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(StegoError::InvalidParams(format!(
                "alpha and beta must be positive, got {alpha} / {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(alpha / (alpha + beta), beta / (alpha + beta))`.
    pub fn fractions(&self) -> (f64, f64) {
        let sum = self.alpha + self.beta;
        (self.alpha / sum, self.beta / sum)
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// Mean of squared element differences.
pub fn mse<T: Real>(a: &PlanarTensor<T>, b: &PlanarTensor<T>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(StegoError::shape(a.shape_string(), b.shape_string()));
    }
    if a.is_empty() {
        return Err(StegoError::EmptyInput("mse of empty tensors"));
    }
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            let d = x.to_f64().unwrap() - y.to_f64().unwrap();
            d * d
        })
        .sum();
    Ok(sum / a.len() as f64)
}

/// `(alpha * MSE(C, H) + beta * MSE(S, O)) / (alpha + beta)`.
pub fn joint_loss<T: Real>(
    cover: &PlanarTensor<T>,
    container: &PlanarTensor<T>,
    secret: &PlanarTensor<T>,
    revealed: &PlanarTensor<T>,
    weights: &LossWeights,
) -> Result<f64> {
    let (wa, wb) = weights.fractions();
    Ok(wa * mse(cover, container)? + wb * mse(secret, revealed)?)
}

/// Loss value and its gradients with respect to the container and the
/// revealed tensor.
#[derive(Clone, Debug)]
pub struct LossGradient<T> {
    pub loss: f64,
    pub image_mse: f64,
    pub audio_mse: f64,
    pub d_container: PlanarTensor<T>,
    pub d_revealed: PlanarTensor<T>,
}

/// Joint loss with gradients; `scale` multiplies the gradients (a batch of
/// `n` examples uses `1 / n` so the batch loss is the element-wise mean).
pub fn joint_loss_gradient<T: Real>(
    cover: &PlanarTensor<T>,
    container: &PlanarTensor<T>,
    secret: &PlanarTensor<T>,
    revealed: &PlanarTensor<T>,
    weights: &LossWeights,
    scale: f64,
) -> Result<LossGradient<T>> {
    let image_mse = mse(cover, container)?;
    let audio_mse = mse(secret, revealed)?;
    let (wa, wb) = weights.fractions();
    let ki = T::lit(scale * wa * 2.0 / cover.len() as f64);
    let ka = T::lit(scale * wb * 2.0 / secret.len() as f64);
    let diff = |p: &PlanarTensor<T>, q: &PlanarTensor<T>, k: T| {
        let mut d = p.clone();
        for (v, &t) in d.values_mut().iter_mut().zip(q.values()) {
            *v = k * (*v - t);
        }
        d
    };
    Ok(LossGradient {
        loss: wa * image_mse + wb * audio_mse,
        image_mse,
        audio_mse,
        d_container: diff(container, cover, ki),
        d_revealed: diff(revealed, secret, ka),
    })
}

/// How secrets are matched to covers from one epoch to the next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    Fixed,
    ShufflePerEpoch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub loss_weights: LossWeights,
    pub method: Method,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Save weights every this many steps (0 disables).
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
    pub feature_maps: usize,
    pub max_steps: Option<usize>,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub pairing: Pairing,
    pub stft: StftParams,
    pub sample_rate: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss_weights: LossWeights::default(),
            method: Method::Stft,
            batch_size: 4,
            epochs: 50,
            learning_rate: 1e-3,
            seed: 0,
            checkpoint_every: 0,
            checkpoint_dir: None,
            feature_maps: NetworkConfig::DEFAULT_FEATURE_MAPS,
            max_steps: None,
            patience: 5,
            pairing: Pairing::ShufflePerEpoch,
            stft: StftParams::default(),
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(StegoError::InvalidParams("batch_size and epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(StegoError::InvalidParams("learning_rate must be non-negative".into()));
        }
        if self.feature_maps == 0 {
            return Err(StegoError::InvalidParams("feature_maps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::for_secret(self.method.secret_channels(), self.feature_maps)
    }

    pub fn codec(&self) -> Result<SecretCodec> {
        SecretCodec::new(self.method, self.stft, self.sample_rate)
    }
}

/// Disjoint train/validation/test lists of (image, audio) paths.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DataSplit {
    pub train: Vec<(PathBuf, PathBuf)>,
    pub validation: Vec<(PathBuf, PathBuf)>,
    pub test: Vec<(PathBuf, PathBuf)>,
}

/// Shuffles images and audio independently from `seed`, pairs them by
/// index, and splits 80/10/10 (validation and test each take
/// `round(n / 10)`, training the rest).
pub fn split_dataset(images: &[PathBuf], audios: &[PathBuf], seed: u64) -> Result<DataSplit> {
    if images.is_empty() || audios.is_empty() {
        return Err(StegoError::EmptyInput("dataset split needs images and audio"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = images.to_vec();
    let mut audios = audios.to_vec();
    images.shuffle(&mut rng);
    audios.shuffle(&mut rng);
    let pairs: Vec<(PathBuf, PathBuf)> = images.into_iter().zip(audios).collect();
    let n = pairs.len();
    let tenth = (n as f64 / 10.0).round() as usize;
    let n_val = tenth;
    let n_test = tenth.min(n - n_val);
    let n_train = n - n_val - n_test;
    let mut it = pairs.into_iter();
    Ok(DataSplit {
        train: it.by_ref().take(n_train).collect(),
        validation: it.by_ref().take(n_val).collect(),
        test: it.collect(),
    })
}

/// First-moment/second-moment adaptive optimizer.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f32>,
    v: Vec<f32>,
    t: i32,
}

impl Adam {
    pub fn new(learning_rate: f64, params: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; params],
            v: vec![0.0; params],
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut StegoNet<f32>, grads: &StegoNet<f32>) {
        self.t += 1;
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let lr = (self.learning_rate * c2.sqrt() / c1) as f32;
        let eps = (self.epsilon * c2.sqrt()) as f32;
        for (((p, &g), m), v) in net
            .params_mut()
            .zip(grads.params())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * *m / (v.sqrt() + eps);
        }
    }
}

/// A cover and secret tensor ready for the networks.
#[derive(Clone, Debug)]
pub struct Example {
    pub cover: PlanarTensor<f32>,
    pub secret: PlanarTensor<f32>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    pub image_mse: f64,
    pub audio_mse: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub step: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

impl LogEntry {
    pub fn line(&self) -> String {
        let val = self.val_loss.map_or_else(|| "-".to_string(), |v| format!("{v:.9e}"));
        format!("{}, {}, {:.9e}, {}", self.step, self.epoch, self.train_loss, val)
    }
}

/// Per-step losses and per-epoch validation losses, optionally mirrored to
/// an append-only text file.
#[derive(Debug, Default)]
pub struct TrainLog {
    pub entries: Vec<LogEntry>,
    file: Option<PathBuf>,
}

impl TrainLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_file(path: impl Into<PathBuf>) -> Self {
        Self {
            entries: Vec::new(),
            file: Some(path.into()),
        }
    }

    pub fn push(&mut self, entry: LogEntry) -> Result<()> {
        if let Some(path) = &self.file {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| StegoError::io(path, e))?;
            writeln!(f, "{}", entry.line()).map_err(|e| StegoError::io(path, e))?;
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.val_loss.is_none())
            .map(|e| e.train_loss)
            .collect()
    }
}

/// Returned by the per-step hook to continue or stop early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug)]
pub struct FitOutcome {
    /// Weights with the lowest validation loss (the final weights when no
    /// validation set is given).
    pub best: StegoNet<f32>,
    pub best_val_loss: Option<f64>,
    pub steps: usize,
    pub epochs: usize,
}

pub struct Trainer {
    net: StegoNet<f32>,
    optimizer: Adam,
    config: TrainConfig,
    step: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let net = StegoNet::init(config.architecture(), config.seed)?;
        Self::with_net(net, config)
    }

    pub fn with_net(net: StegoNet<f32>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = Adam::new(config.learning_rate, net.param_count());
        Ok(Self {
            net,
            optimizer,
            config,
            step: 0,
        })
    }

    pub fn net(&self) -> &StegoNet<f32> {
        &self.net
    }

    pub fn into_net(self) -> StegoNet<f32> {
        self.net
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// One optimizer update on a mini-batch. Gradients are accumulated in
    /// batch order.
    pub fn train_step(&mut self, batch: &[(&PlanarTensor<f32>, &PlanarTensor<f32>)]) -> Result<StepStats> {
        if batch.is_empty() {
            return Err(StegoError::EmptyInput("training batch"));
        }
        let mut grads = StegoNet::zeros(self.net.architecture())?;
        let scale = 1.0 / batch.len() as f64;
        let (mut loss, mut image, mut audio) = (0.0, 0.0, 0.0);
        let mut tape = Tape::new();
        for (cover, secret) in batch {
            let out = self.net.forward_recorded(cover, secret, &mut tape)?;
            let g = joint_loss_gradient(
                cover,
                &out.container,
                secret,
                &out.revealed,
                &self.config.loss_weights,
                scale,
            )?;
            self.net.backward(&tape, &g.d_container, &g.d_revealed, &mut grads)?;
            loss += g.loss * scale;
            image += g.image_mse * scale;
            audio += g.audio_mse * scale;
        }
        if !loss.is_finite() {
            return Err(StegoError::NonFiniteLoss { step: self.step });
        }
        self.optimizer.step(&mut self.net, &grads);
        self.step += 1;
        Ok(StepStats {
            step: self.step,
            epoch: 0,
            loss,
            image_mse: image,
            audio_mse: audio,
        })
    }

    /// Mean joint loss over examples, forward only.
    pub fn evaluate_loss(&self, examples: &[Example]) -> Result<f64> {
        if examples.is_empty() {
            return Err(StegoError::EmptyInput("evaluation set"));
        }
        let mut total = 0.0;
        for ex in examples {
            let container = self.net.encode(&ex.cover, &ex.secret)?;
            let revealed = self.net.reveal_forward(&container)?;
            total += joint_loss(&ex.cover, &container, &ex.secret, &revealed, &self.config.loss_weights)?;
        }
        Ok(total / examples.len() as f64)
    }

    /// Runs epochs of mini-batch updates with per-epoch validation and
    /// early stopping. `hook` sees every step and may stop training.
    pub fn fit(
        &mut self,
        train: &[Example],
        validation: &[Example],
        log: &mut TrainLog,
        mut hook: impl FnMut(&StepStats, &StegoNet<f32>) -> Control,
    ) -> Result<FitOutcome> {
        if train.is_empty() {
            return Err(StegoError::EmptyInput("training set"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(0x9e37_79b9));
        let mut best: Option<(f64, StegoNet<f32>)> = None;
        let mut since_best = 0;
        let mut epochs_run = 0;
        let budget = self.config.max_steps.unwrap_or(usize::MAX);

        'epochs: for epoch in 1..=self.config.epochs {
            epochs_run = epoch;
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(&mut rng);
            let mut secrets: Vec<usize> = order.clone();
            if self.config.pairing == Pairing::ShufflePerEpoch {
                secrets.shuffle(&mut rng);
            }
            for chunk in order
                .iter()
                .zip(&secrets)
                .collect::<Vec<_>>()
                .chunks(self.config.batch_size)
            {
                let batch: Vec<_> = chunk
                    .iter()
                    .map(|(&c, &s)| (&train[c].cover, &train[s].secret))
                    .collect();
                let mut stats = self.train_step(&batch)?;
                stats.epoch = epoch;
                log.push(LogEntry {
                    step: stats.step,
                    epoch,
                    train_loss: stats.loss,
                    val_loss: None,
                })?;
                if self.config.checkpoint_every > 0 && stats.step % self.config.checkpoint_every == 0 {
                    if let Some(dir) = &self.config.checkpoint_dir {
                        fs::create_dir_all(dir).map_err(|e| StegoError::io(dir, e))?;
                        save_weights(&self.net, dir.join(format!("step-{:06}.bin", stats.step)))?;
                    }
                }
                let stop = hook(&stats, &self.net) == Control::Stop;
                if stop || self.step >= budget {
                    break 'epochs;
                }
            }

            if !validation.is_empty() {
                let val = self.evaluate_loss(validation)?;
                log.push(LogEntry {
                    step: self.step,
                    epoch,
                    train_loss: log.entries.last().map_or(f64::NAN, |e| e.train_loss),
                    val_loss: Some(val),
                })?;
                if best.as_ref().map_or(true, |(b, _)| val < *b) {
                    best = Some((val, self.net.clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= self.config.patience {
                        break;
                    }
                }
            }
        }

        let (best_val_loss, best) = match best {
            Some((v, net)) => (Some(v), net),
            None => (None, self.net.clone()),
        };
        Ok(FitOutcome {
            best,
            best_val_loss,
            steps: self.step,
            epochs: epochs_run,
        })
    }
}

/// Loads a cover image (255×255 after ingestion) and secret clip into
/// network tensors.
pub fn load_example(image: &Path, audio_path: &Path, codec: &SecretCodec) -> Result<Example> {
    let cover = image_io::load_cover(image)?;
    let clip: AudioClip = audio::load_wav(audio_path, codec.sample_rate)?;
    Ok(Example {
        cover,
        secret: codec.encode(&clip)?,
    })
}

fn load_examples(pairs: &[(PathBuf, PathBuf)], codec: &SecretCodec) -> Result<Vec<Example>> {
    pairs.iter().map(|(i, a)| load_example(i, a, codec)).collect()
}

/// Trains from a file-based split; returns the best-validation weights and
/// the training log.
pub fn train(split: &DataSplit, config: &TrainConfig, log_path: Option<&Path>) -> Result<(FitOutcome, TrainLog)> {
    let codec = config.codec()?;
    let train_set = load_examples(&split.train, &codec)?;
    let val_set = load_examples(&split.validation, &codec)?;
    let mut log = match log_path {
        Some(p) => TrainLog::with_file(p),
        None => TrainLog::new(),
    };
    let mut trainer = Trainer::new(config.clone())?;
    let outcome = trainer.fit(&train_set, &val_set, &mut log, |_, _| Control::Continue)?;
    Ok((outcome, log))
}
