//! Image and audio fidelity metrics, reports, and spectrogram difference
//! figures.

use std::fmt::Write as _;
use std::path::Path;

use crate::audio::AudioClip;
use crate::error::{Result, StegoError};
use crate::spectral::{self, StftParams};
use crate::tensor::{PlanarTensor, Real};

/// Floor of the log compression in difference figures, in spectrum units.
pub const DIFF_LOG_FLOOR: f64 = 1e-4;

/// Mean squared difference over every channel value.
pub fn mse_per_pixel_per_channel<T: Real>(c: &PlanarTensor<T>, h: &PlanarTensor<T>) -> Result<f64> {
    let (hh, hw, hc) = c.shape();
    h.ensure_shape(hh, hw, hc)?;
    let sum: f64 = c
        .values()
        .iter()
        .zip(h.values())
        .map(|(&a, &b)| {
            let d = a.to_f64().unwrap() - b.to_f64().unwrap();
            d * d
        })
        .sum();
    Ok(sum / c.len() as f64)
}

/// Sum of per-pair MSEs. A shape mismatch names the offending pair.
pub fn sse_over_set<T: Real>(pairs: &[(&PlanarTensor<T>, &PlanarTensor<T>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(StegoError::EmptyInput("image pair set"));
    }
    pairs.iter().enumerate().try_fold(0.0, |acc, (index, (c, h))| {
        mse_per_pixel_per_channel(c, h)
            .map(|m| acc + m)
            .map_err(|e| StegoError::Pair {
                index,
                source: Box::new(e),
            })
    })
}

/// Pearson correlation, clamped to [-1, 1] against rounding.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StegoError::shape(format!("{} values", x.len()), format!("{} values", y.len())));
    }
    if x.len() < 2 {
        return Err(StegoError::UndefinedCorrelation);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StegoError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Root-mean-square difference between two clips on the [-1, 1) scale.
pub fn rms_error(s: &AudioClip, o: &AudioClip) -> Result<f64> {
    if s.len() != o.len() {
        return Err(StegoError::shape(format!("{} samples", s.len()), format!("{} samples", o.len())));
    }
    if s.is_empty() {
        return Err(StegoError::EmptyInput("audio clip"));
    }
    let sum: f64 = s
        .to_normalized()
        .iter()
        .zip(o.to_normalized())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / s.len() as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairMetrics {
    pub image_mse: f64,
    /// `None` when either clip is constant.
    pub audio_r: Option<f64>,
    pub audio_rms: f64,
}

impl PairMetrics {
    pub fn measure(
        cover: &PlanarTensor<f32>,
        container: &PlanarTensor<f32>,
        secret: &AudioClip,
        revealed: &AudioClip,
    ) -> Result<Self> {
        let image_mse = mse_per_pixel_per_channel(cover, container)?;
        let audio_r = match pearson(&secret.as_f64(), &revealed.as_f64()) {
            Ok(r) => Some(r),
            Err(StegoError::UndefinedCorrelation) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            image_mse,
            audio_r,
            audio_rms: rms_error(secret, revealed)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub sse: f64,
    pub pair_count: usize,
    /// Mean over pairs with a defined correlation; `None` if there are none.
    pub mean_correlation: Option<f64>,
    pub mean_rms: f64,
    pub per_pair: Vec<PairMetrics>,
}

impl MetricsReport {
    pub fn from_pairs(per_pair: Vec<PairMetrics>) -> Self {
        let sse = per_pair.iter().map(|p| p.image_mse).sum();
        let rs: Vec<f64> = per_pair.iter().filter_map(|p| p.audio_r).collect();
        let mean_correlation = (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64);
        let mean_rms = if per_pair.is_empty() {
            0.0
        } else {
            per_pair.iter().map(|p| p.audio_rms).sum::<f64>() / per_pair.len() as f64
        };
        Self {
            sse,
            pair_count: per_pair.len(),
            mean_correlation,
            mean_rms,
            per_pair,
        }
    }

    pub fn undefined_correlations(&self) -> usize {
        self.per_pair.iter().filter(|p| p.audio_r.is_none()).count()
    }

    /// Human-readable table, one row per pair.
    pub fn to_text(&self, title: &str) -> String {
        let mut s = String::new();
        writeln!(s, "{title}").unwrap();
        writeln!(s, "pairs: {}", self.pair_count).unwrap();
        writeln!(s, "sse: {:.6}", self.sse).unwrap();
        match self.mean_correlation {
            Some(r) => writeln!(s, "mean correlation: {r:.6}").unwrap(),
            None => writeln!(s, "mean correlation: undefined").unwrap(),
        }
        writeln!(s, "mean rms error: {:.6}", self.mean_rms).unwrap();
        writeln!(s, "{:>6}  {:>12}  {:>10}  {:>10}", "pair", "image_mse", "audio_r", "audio_rms").unwrap();
        for (i, p) in self.per_pair.iter().enumerate() {
            let r = p.audio_r.map_or("undefined".to_string(), |r| format!("{r:.6}"));
            writeln!(s, "{i:>6}  {:>12.6e}  {r:>10}  {:>10.6}", p.image_mse, p.audio_rms).unwrap();
        }
        s
    }

    /// `key=value` lines under `prefix.`.
    pub fn to_kv(&self, prefix: &str) -> String {
        let mut s = String::new();
        writeln!(s, "{prefix}.pair_count={}", self.pair_count).unwrap();
        writeln!(s, "{prefix}.sse={}", self.sse).unwrap();
        let r = self.mean_correlation.map_or("undefined".to_string(), |r| r.to_string());
        writeln!(s, "{prefix}.mean_correlation={r}").unwrap();
        writeln!(s, "{prefix}.undefined_correlations={}", self.undefined_correlations()).unwrap();
        writeln!(s, "{prefix}.mean_rms={}", self.mean_rms).unwrap();
        for (i, p) in self.per_pair.iter().enumerate() {
            writeln!(s, "{prefix}.pair.{i}.image_mse={}", p.image_mse).unwrap();
            let r = p.audio_r.map_or("undefined".to_string(), |r| r.to_string());
            writeln!(s, "{prefix}.pair.{i}.audio_r={r}").unwrap();
            writeln!(s, "{prefix}.pair.{i}.audio_rms={}", p.audio_rms).unwrap();
        }
        s
    }
}

fn magnitudes(clip: &AudioClip, params: &StftParams) -> Result<PlanarTensor<f64>> {
    let spec = spectral::stft_signal(&clip.to_normalized(), params)?;
    Ok(PlanarTensor::from_fn(spec.height(), spec.width(), 1, |y, x, _| {
        spec.get(y, x, 0).hypot(spec.get(y, x, 1))
    }))
}

/// Absolute magnitude-spectrogram difference, log-compressed and min-max
/// scaled to [0, 1]. Frequency runs down the rows.
pub fn spectrogram_diff_image(s: &AudioClip, o: &AudioClip, params: &StftParams) -> Result<PlanarTensor<f32>> {
    if s.len() != o.len() {
        return Err(StegoError::shape(format!("{} samples", s.len()), format!("{} samples", o.len())));
    }
    let (ms, mo) = (magnitudes(s, params)?, magnitudes(o, params)?);
    let d: Vec<f64> = ms
        .values()
        .iter()
        .zip(mo.values())
        .map(|(a, b)| (1.0 + (a - b).abs() / DIFF_LOG_FLOOR).ln())
        .collect();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let scaled = d
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span) as f32 } else { 0.0 })
        .collect();
    PlanarTensor::new(ms.height(), ms.width(), 1, scaled)
}

pub fn write_text(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| StegoError::io(path, e))
}
