//! Command-line surface. Exit codes: 0 success, 1 usage, 2 data, 3 capacity.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::codec::{Method, SecretCodec};
use crate::config;
use crate::error::Result;
use crate::metrics;
use crate::pipeline;
use crate::training::{self, LossWeights, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "audiostego", version, about = "Hide speech inside images with convolutional networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Plain-text key = value configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Secret representation: raw or stft.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize raw images and WAV files into a training directory.
    Ingest {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Pair ingested files and split them 80/10/10.
    Split {
        /// Directory produced by `ingest`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Train the prepare/hide/reveal networks.
    Train {
        #[arg(long)]
        split: PathBuf,
        /// Output weight file; the log goes beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        feature_maps: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Hide a WAV clip in a cover image.
    Encode {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Refuse clips longer than capacity instead of truncating.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Recover the WAV clip from a container image.
    Decode {
        #[arg(long)]
        container: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Measure image SSE and audio correlation on the test split.
    Eval {
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
        /// Spectrogram difference figures for the first N pairs.
        #[arg(long, default_value_t = 4)]
        figures: usize,
        #[command(flatten)]
        shared: Shared,
    },
    /// Compare k-bit LSB embedding on the test split.
    CompareLsb {
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        k: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        shared: Shared,
    },
}

fn resolve(shared: &Shared) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &shared.config {
        config::load_config(path, &mut cfg)?;
    }
    if let Some(m) = shared.method {
        cfg.method = m;
    }
    if let Some(s) = shared.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn codec_for(cfg: &TrainConfig) -> Result<SecretCodec> {
    SecretCodec::new(cfg.method, cfg.stft, cfg.sample_rate)
}

/// Runs a parsed command, printing progress to stdout and warnings to
/// stderr.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { images, audio, out, shared } => {
            let cfg = resolve(&shared)?;
            let m = pipeline::ingest(&images, &audio, &out, &codec_for(&cfg)?)?;
            println!(
                "ingested {} images and {} clips ({} errors); manifest at {}",
                m.images().len(),
                m.audio().len(),
                m.errors.len(),
                out.join("manifest.tsv").display()
            );
            for e in m.entries.iter().filter(|e| e.note.is_some()) {
                eprintln!("warning: {}: {}", e.original.display(), e.note.as_deref().unwrap_or(""));
            }
        }
        Command::Split { data, out, shared } => {
            let cfg = resolve(&shared)?;
            let (images, audio) = pipeline::ingested_files(&data)?;
            let split = training::split_dataset(&images, &audio, cfg.seed)?;
            pipeline::save_split(&split, &out)?;
            println!(
                "{} train / {} validation / {} test pairs written to {}",
                split.train.len(),
                split.validation.len(),
                split.test.len(),
                out.display()
            );
        }
        Command::Train {
            split,
            out,
            alpha,
            beta,
            feature_maps,
            epochs,
            max_steps,
            shared,
        } => {
            let mut cfg = resolve(&shared)?;
            cfg.loss_weights = LossWeights::new(
                alpha.unwrap_or(cfg.loss_weights.alpha()),
                beta.unwrap_or(cfg.loss_weights.beta()),
            )?;
            cfg.feature_maps = feature_maps.unwrap_or(cfg.feature_maps);
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.max_steps = max_steps.or(cfg.max_steps);
            let split = pipeline::load_split(&split)?;
            let (outcome, _) = pipeline::train_to_file(&split, &cfg, &out)?;
            println!(
                "trained {} steps over {} epochs; best validation loss {}; weights at {}",
                outcome.steps,
                outcome.epochs,
                outcome.best_val_loss.map_or("n/a".into(), |v| format!("{v:.6e}")),
                out.display()
            );
        }
        Command::Encode {
            cover,
            secret,
            weights,
            strict,
            out,
            shared,
        } => {
            let cfg = resolve(&shared)?;
            let r = pipeline::encode_files(&cover, &secret, &weights, &codec_for(&cfg)?, strict, &out)?;
            if let Some(n) = r.truncated_from {
                eprintln!(
                    "warning: clip of {n} samples truncated to {} for method {}",
                    r.capacity, cfg.method
                );
            }
            println!("container written to {}", out.display());
        }
        Command::Decode {
            container,
            weights,
            out,
            shared,
        } => {
            let cfg = resolve(&shared)?;
            let clip = pipeline::decode_files(&container, &weights, &codec_for(&cfg)?, &out)?;
            println!("{:.2} s of audio written to {}", clip.duration_secs(), out.display());
        }
        Command::Eval {
            split,
            weights,
            out,
            figures,
            shared,
        } => {
            let cfg = resolve(&shared)?;
            let split = pipeline::load_split(&split)?;
            let net = pipeline::load_method_weights(&weights, cfg.method)?;
            let fig_dir = out.join("figures");
            let report = pipeline::evaluate(&net, &codec_for(&cfg)?, &split.test, Some((&fig_dir, figures)))?;
            pipeline::write_eval_report(&report, &out)?;
            print!("{}", report.to_text());
        }
        Command::CompareLsb { split, k, out, shared } => {
            let cfg = resolve(&shared)?;
            let split = pipeline::load_split(&split)?;
            let table = pipeline::compare_lsb_files(&split.test, &k, cfg.sample_rate)?;
            let text = table.to_text();
            if let Some(path) = out {
                metrics::write_text(&path, &text)?;
            }
            print!("{text}");
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

