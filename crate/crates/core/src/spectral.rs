//! Short-time Fourier transform onto a 255×255×2 grid and its weighted
//! overlap-add inverse.
//!
//! With the default parameters (508-point FFT, hop 250) a 64,000-sample
//! clip is zero-padded by 4 samples on each side to 64,008 samples, which
//! is exactly `508 + 254 * 250`, giving 255 frames of 255 one-sided bins.
//! Channel 0 holds real parts and channel 1 imaginary parts, both divided
//! by the FFT size. Rows index frequency, columns index frames.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::{quantize_sample, AudioClip, IMAGE_SIDE};
use crate::error::{Result, StegoError};
use crate::tensor::PlanarTensor;

/// Window-energy floor below which overlap-add normalization is refused.
pub const WINDOW_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Window {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StftParams {
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
    pub expected_samples: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            fft_size: 508,
            hop: 250,
            window: Window::Hann,
            expected_samples: 64_000,
        }
    }
}

impl StftParams {
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames needed to cover every sample.
    pub fn frames(&self) -> usize {
        if self.expected_samples <= self.fft_size || self.hop == 0 {
            return 1;
        }
        1 + (self.expected_samples - self.fft_size).div_ceil(self.hop)
    }

    /// Zero padding `(before, after)` added around the clip.
    pub fn padding(&self) -> (usize, usize) {
        let total = self.fft_size + (self.frames() - 1) * self.hop;
        let extra = total.saturating_sub(self.expected_samples);
        (extra / 2, extra - extra / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(StegoError::InvalidParams(m));
        if self.fft_size < 2 || self.fft_size % 2 != 0 {
            return bad(format!("fft_size {} must be even and at least 2", self.fft_size));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return bad(format!("hop {} must be in 1..={}", self.hop, self.fft_size));
        }
        if self.expected_samples < self.fft_size {
            return bad(format!(
                "expected_samples {} shorter than fft_size {}",
                self.expected_samples, self.fft_size
            ));
        }
        if self.bins() != IMAGE_SIDE || self.frames() != IMAGE_SIDE {
            return bad(format!(
                "grid is {}x{} (bins x frames), must be {IMAGE_SIDE}x{IMAGE_SIDE}",
                self.bins(),
                self.frames()
            ));
        }
        Ok(())
    }

    pub fn capacity_secs(&self, sample_rate: u32) -> f64 {
        self.expected_samples as f64 / sample_rate as f64
    }
}

/// STFT of samples already scaled to full-scale floats; returns the
/// unquantized bins×frames×2 tensor.
pub fn stft_signal(signal: &[f64], params: &StftParams) -> Result<PlanarTensor<f64>> {
    params.validate()?;
    if signal.len() != params.expected_samples {
        return Err(StegoError::shape(
            format!("{} samples", params.expected_samples),
            format!("{} samples", signal.len()),
        ));
    }
    let n = params.fft_size;
    let (bins, frames) = (params.bins(), params.frames());
    let (before, after) = params.padding();
    let mut padded = vec![0.0; before];
    padded.extend_from_slice(signal);
    padded.resize(padded.len() + after, 0.0);

    let window = params.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    let mut out = PlanarTensor::zeros(bins, frames, 2);
    for t in 0..frames {
        let frame = &padded[t * params.hop..t * params.hop + n];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, c) in buf.iter().take(bins).enumerate() {
            out.set(k, t, 0, c.re * scale);
            out.set(k, t, 1, c.im * scale);
        }
    }
    Ok(out)
}

/// STFT of a clip of exactly `params.expected_samples` samples.
pub fn stft(clip: &AudioClip, params: &StftParams) -> Result<PlanarTensor<f32>> {
    Ok(stft_signal(&clip.to_normalized(), params)?.cast())
}

/// Weighted overlap-add inverse with window-squared normalization,
/// returning full-scale float samples.
pub fn istft_signal(t: &PlanarTensor<f64>, params: &StftParams) -> Result<Vec<f64>> {
    params.validate()?;
    let (bins, frames) = (params.bins(), params.frames());
    t.ensure_shape(bins, frames, 2)?;
    let n = params.fft_size;
    let (before, _) = params.padding();
    let total = n + (frames - 1) * params.hop;

    let window = params.window.coefficients(n);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut num = vec![0.0; total];
    let mut den = vec![0.0; total];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for f in 0..frames {
        // Rebuild the Hermitian spectrum; DC and Nyquist must be real.
        for k in 0..bins {
            let mut c = Complex::new(t.get(k, f, 0), t.get(k, f, 1)) * n as f64;
            if k == 0 || k == n / 2 {
                c.im = 0.0;
            }
            buf[k] = c;
            if k != 0 && k != n / 2 {
                buf[n - k] = c.conj();
            }
        }
        ifft.process(&mut buf);
        let off = f * params.hop;
        for (m, (c, &w)) in buf.iter().zip(&window).enumerate() {
            num[off + m] += w * c.re / n as f64;
            den[off + m] += w * w;
        }
    }
    (0..params.expected_samples)
        .map(|i| {
            let d = den[before + i];
            if d < WINDOW_TOLERANCE {
                Err(StegoError::DegenerateWindow { sample: i })
            } else {
                Ok(num[before + i] / d)
            }
        })
        .collect()
}

/// Inverse STFT converted to PCM-16 with rounding and clamping.
pub fn istft(t: &PlanarTensor<f32>, params: &StftParams, sample_rate: u32) -> Result<AudioClip> {
    let signal = istft_signal(&t.cast(), params)?;
    AudioClip::new(
        signal.iter().map(|&v| quantize_sample(v * 32768.0)).collect(),
        sample_rate,
    )
}

/// Per-frame Parseval residual: `fft_size * sum_k c_k |X_k|^2` against the
/// windowed-frame energy, where `c_k` is 1 for DC and Nyquist and 2 for the
/// bins whose conjugates are not stored. Returns the largest relative error.
pub fn parseval_error(signal: &[f64], spectrum: &PlanarTensor<f64>, params: &StftParams) -> f64 {
    let n = params.fft_size;
    let window = params.window.coefficients(n);
    let (before, after) = params.padding();
    let mut padded = vec![0.0; before];
    padded.extend_from_slice(signal);
    padded.resize(padded.len() + after, 0.0);
    let mut worst: f64 = 0.0;
    for f in 0..params.frames() {
        let frame = &padded[f * params.hop..f * params.hop + n];
        let time: f64 = frame.iter().zip(&window).map(|(x, w)| (x * w).powi(2)).sum();
        let freq: f64 = (0..params.bins())
            .map(|k| {
                let c = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                c * (spectrum.get(k, f, 0).powi(2) + spectrum.get(k, f, 1).powi(2))
            })
            .sum::<f64>()
            * n as f64;
        if time > 0.0 {
            worst = worst.max((freq - time).abs() / time);
        }
    }
    worst
}
