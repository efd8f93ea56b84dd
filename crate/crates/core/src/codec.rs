//! Secret-audio representations: raw sample packing and STFT spectrograms.

use std::fmt;
use std::str::FromStr;

use crate::audio::{self, AudioClip, RAW_CAPACITY};
use crate::error::{Result, StegoError};
use crate::spectral::{self, StftParams};
use crate::tensor::PlanarTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Samples normalized and packed into 255×255×3.
    Raw,
    /// Real/imaginary STFT planes, 255×255×2.
    Stft,
}

impl Method {
    pub fn secret_channels(self) -> usize {
        match self {
            Method::Raw => 3,
            Method::Stft => 2,
        }
    }

    pub fn capacity_samples(self, params: &StftParams) -> usize {
        match self {
            Method::Raw => RAW_CAPACITY,
            Method::Stft => params.expected_samples,
        }
    }

    pub fn capacity_secs(self, params: &StftParams, sample_rate: u32) -> f64 {
        self.capacity_samples(params) as f64 / sample_rate as f64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Raw => "raw",
            Method::Stft => "stft",
        })
    }
}

impl FromStr for Method {
    type Err = StegoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" | "method-1" | "1" => Ok(Method::Raw),
            "stft" | "method-2" | "2" => Ok(Method::Stft),
            other => Err(StegoError::Usage(format!("unknown method '{other}' (raw|stft)"))),
        }
    }
}

/// Converts clips to and from the tensor the networks consume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecretCodec {
    pub method: Method,
    pub stft: StftParams,
    pub sample_rate: u32,
}

impl SecretCodec {
    pub fn new(method: Method, stft: StftParams, sample_rate: u32) -> Result<Self> {
        if method == Method::Stft {
            stft.validate()?;
        }
        Ok(Self {
            method,
            stft,
            sample_rate,
        })
    }

    pub fn capacity_samples(&self) -> usize {
        self.method.capacity_samples(&self.stft)
    }

    pub fn capacity_secs(&self) -> f64 {
        self.method.capacity_secs(&self.stft, self.sample_rate)
    }

    /// Fits the clip to capacity, then builds the secret tensor.
    pub fn encode(&self, clip: &AudioClip) -> Result<PlanarTensor<f32>> {
        let fitted = audio::fit_to_capacity(clip, self.capacity_samples());
        match self.method {
            Method::Raw => audio::normalize_raw(&fitted),
            Method::Stft => spectral::stft(&fitted, &self.stft),
        }
    }

    pub fn decode(&self, t: &PlanarTensor<f32>) -> Result<AudioClip> {
        match self.method {
            Method::Raw => audio::denormalize_raw(t, self.sample_rate),
            Method::Stft => spectral::istft(t, &self.stft, self.sample_rate),
        }
    }
}

impl Default for SecretCodec {
    fn default() -> Self {
        Self {
            method: Method::Stft,
            stft: StftParams::default(),
            sample_rate: audio::DEFAULT_SAMPLE_RATE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacities_match_four_and_twelve_seconds() {
        let p = StftParams::default();
        assert_eq!(Method::Raw.capacity_samples(&p), 195_075);
        assert_eq!(Method::Stft.capacity_samples(&p), 64_000);
        assert!((Method::Stft.capacity_secs(&p, 16_000) - 4.0).abs() < 1e-12);
        assert!((Method::Raw.capacity_secs(&p, 16_000) - 12.1921875).abs() < 1e-12);
    }

    #[test]
    fn parse_method_names() {
        assert_eq!("raw".parse::<Method>().unwrap(), Method::Raw);
        assert_eq!("STFT".parse::<Method>().unwrap(), Method::Stft);
        assert!("dct".parse::<Method>().is_err());
    }

    #[test]
    fn encode_shapes() {
        let clip = AudioClip::silence(1000, 16_000);
        for (m, ch) in [(Method::Raw, 3), (Method::Stft, 2)] {
            let codec = SecretCodec::new(m, StftParams::default(), 16_000).unwrap();
            let t = codec.encode(&clip).unwrap();
            assert_eq!(t.shape(), (255, 255, ch));
            assert_eq!(codec.decode(&t).unwrap().len(), codec.capacity_samples());
        }
    }
}
