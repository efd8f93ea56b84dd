//! Plain-text `key = value` configuration mirroring [`TrainConfig`] and
//! [`StftParams`]. Blank lines and `#` comments are ignored.

use std::path::{Path, PathBuf};

use crate::error::{Result, StegoError};
use crate::training::{LossWeights, Pairing, TrainConfig};

pub const KEYS: &[&str] = &[
    "method",
    "alpha",
    "beta",
    "batch_size",
    "epochs",
    "learning_rate",
    "seed",
    "checkpoint_every",
    "checkpoint_dir",
    "feature_maps",
    "max_steps",
    "patience",
    "pairing",
    "fft_size",
    "hop",
    "expected_samples",
    "sample_rate",
];

/// Parses `text` and applies every entry on top of `config`.
pub fn apply_config_text(text: &str, config: &mut TrainConfig) -> Result<()> {
    let mut alpha = config.loss_weights.alpha();
    let mut beta = config.loss_weights.beta();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| StegoError::Usage(format!("config line {}: {msg}", n + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key = value, found '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        macro_rules! parse {
            () => {
                value
                    .parse()
                    .map_err(|_| bad(format!("invalid value '{value}' for {key}")))?
            };
        }
        match key {
            "method" => config.method = value.parse().map_err(|e: StegoError| bad(e.to_string()))?,
            "alpha" => alpha = parse!(),
            "beta" => beta = parse!(),
            "batch_size" => config.batch_size = parse!(),
            "epochs" => config.epochs = parse!(),
            "learning_rate" => config.learning_rate = parse!(),
            "seed" => config.seed = parse!(),
            "checkpoint_every" => config.checkpoint_every = parse!(),
            "checkpoint_dir" => config.checkpoint_dir = Some(PathBuf::from(value)),
            "feature_maps" => config.feature_maps = parse!(),
            "max_steps" => {
                config.max_steps = match value {
                    "none" | "" => None,
                    _ => Some(parse!()),
                }
            }
            "patience" => config.patience = parse!(),
            "pairing" => {
                config.pairing = match value {
                    "fixed" => Pairing::Fixed,
                    "shuffle" => Pairing::ShufflePerEpoch,
                    _ => return Err(bad(format!("pairing must be fixed or shuffle, found '{value}'"))),
                }
            }
            "fft_size" => config.stft.fft_size = parse!(),
            "hop" => config.stft.hop = parse!(),
            "expected_samples" => config.stft.expected_samples = parse!(),
            "sample_rate" => config.sample_rate = parse!(),
            _ => return Err(bad(format!("unknown key '{key}'"))),
        }
    }
    config.loss_weights = LossWeights::new(alpha, beta)?;
    config.validate()
}

pub fn load_config(path: impl AsRef<Path>, config: &mut TrainConfig) -> Result<()> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| StegoError::io(path, e))?;
    apply_config_text(&text, config)
}

/// Serializes the fields `apply_config_text` understands.
pub fn config_to_text(config: &TrainConfig) -> String {
    let mut lines = vec![
        format!("method = {}", config.method),
        format!("alpha = {}", config.loss_weights.alpha()),
        format!("beta = {}", config.loss_weights.beta()),
        format!("batch_size = {}", config.batch_size),
        format!("epochs = {}", config.epochs),
        format!("learning_rate = {}", config.learning_rate),
        format!("seed = {}", config.seed),
        format!("checkpoint_every = {}", config.checkpoint_every),
    ];
    if let Some(dir) = &config.checkpoint_dir {
        lines.push(format!("checkpoint_dir = {}", dir.display()));
    }
    lines.extend([
        format!("feature_maps = {}", config.feature_maps),
        format!("max_steps = {}", config.max_steps.map_or("none".into(), |s| s.to_string())),
        format!("patience = {}", config.patience),
        format!(
            "pairing = {}",
            match config.pairing {
                Pairing::Fixed => "fixed",
                Pairing::ShufflePerEpoch => "shuffle",
            }
        ),
        format!("fft_size = {}", config.stft.fft_size),
        format!("hop = {}", config.stft.hop),
        format!("expected_samples = {}", config.stft.expected_samples),
        format!("sample_rate = {}", config.sample_rate),
    ]);
    lines.join("\n") + "\n"
}
