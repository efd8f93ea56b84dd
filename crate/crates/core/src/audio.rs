//! PCM-16 clips, WAV I/O, and the raw-sample packing into a 255×255×3
//! tensor.

use std::path::Path;

use crate::error::{Result, StegoError};
use crate::tensor::PlanarTensor;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Side length of cover images and secret tensors.
pub const IMAGE_SIDE: usize = 255;

/// Samples packed by [`normalize_raw`]: 255 · 255 · 3.
pub const RAW_CAPACITY: usize = IMAGE_SIDE * IMAGE_SIDE * 3;

/// Mono 16-bit PCM audio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AudioClip {
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(StegoError::InvalidParams("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0; len],
            sample_rate,
        }
    }

    /// Quantizes samples on the [-1, 1) full-scale range.
    pub fn from_normalized(samples: &[f64], sample_rate: u32) -> Self {
        Self {
            samples: samples.iter().map(|&v| quantize_sample(v * 32768.0)).collect(),
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Samples scaled to [-1, 1).
    pub fn to_normalized(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64 / 32768.0).collect()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

/// Rounds to the nearest integer and clamps into the PCM-16 range.
pub fn quantize_sample(v: f64) -> i16 {
    v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Reads a PCM-16 WAV file, mixing multi-channel audio down to mono by
/// per-frame integer averaging. No resampling is done.
pub fn load_wav(path: impl AsRef<Path>, expected_rate: u32) -> Result<AudioClip> {
    let path = path.as_ref();
    let not_wav = |e: hound::Error| match e {
        hound::Error::IoError(io) => StegoError::io(path, io),
        other => StegoError::NotWav {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut reader = hound::WavReader::open(path).map_err(not_wav)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(StegoError::UnsupportedEncoding(format!(
            "{:?} {}-bit",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if spec.sample_rate != expected_rate {
        return Err(StegoError::SampleRateMismatch {
            expected: expected_rate,
            found: spec.sample_rate,
        });
    }
    let raw: Vec<i16> = reader
        .samples::<i16>()
        .collect::<std::result::Result<_, _>>()
        .map_err(not_wav)?;
    let samples = mix_down(&raw, spec.channels as usize);
    AudioClip::new(samples, spec.sample_rate)
}

/// Averages interleaved frames; a trailing partial frame is dropped.
pub fn mix_down(interleaved: &[i16], channels: usize) -> Vec<i16> {
    if channels <= 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| (frame.iter().map(|&s| s as i32).sum::<i32>() / channels as i32) as i16)
        .collect()
}

/// Writes a mono PCM-16 WAV file.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => StegoError::io(path, io),
        other => StegoError::NotWav {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in &clip.samples {
        writer.write_sample(s).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

/// Truncates or zero-pads at the tail to exactly `capacity` samples.
pub fn fit_to_capacity(clip: &AudioClip, capacity: usize) -> AudioClip {
    let mut samples = clip.samples.clone();
    samples.resize(capacity, 0);
    AudioClip {
        samples,
        sample_rate: clip.sample_rate,
    }
}

/// Packs exactly [`RAW_CAPACITY`] samples into a 255×255×3 tensor, channel
/// fastest, mapping each sample `x` to `(x / 32768 + 1) / 2`.
pub fn normalize_raw(clip: &AudioClip) -> Result<PlanarTensor<f32>> {
    if clip.len() != RAW_CAPACITY {
        return Err(StegoError::shape(
            format!("{RAW_CAPACITY} samples"),
            format!("{} samples", clip.len()),
        ));
    }
    let values = clip
        .samples
        .iter()
        .map(|&x| (x as f32 / 32768.0 + 1.0) / 2.0)
        .collect();
    PlanarTensor::new(IMAGE_SIDE, IMAGE_SIDE, 3, values)
}

/// Inverse of [`normalize_raw`]; out-of-range values clamp to the PCM-16
/// limits.
pub fn denormalize_raw(t: &PlanarTensor<f32>, sample_rate: u32) -> Result<AudioClip> {
    t.ensure_shape(IMAGE_SIDE, IMAGE_SIDE, 3)?;
    let samples = t
        .values()
        .iter()
        .map(|&v| quantize_sample((2.0 * v as f64 - 1.0) * 32768.0))
        .collect();
    AudioClip::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clip_of(samples: Vec<i16>) -> AudioClip {
        AudioClip::new(samples, DEFAULT_SAMPLE_RATE).unwrap()
    }

    #[test]
    fn fit_truncates_pads_and_keeps() {
        let long = clip_of((0..70_000).map(|i| (i % 100) as i16).collect());
        let fitted = fit_to_capacity(&long, 64_000);
        assert_eq!(fitted.samples[..], long.samples[..64_000]);

        let short = clip_of(vec![7; 60_000]);
        let fitted = fit_to_capacity(&short, 64_000);
        assert_eq!(fitted.len(), 64_000);
        assert!(fitted.samples[..60_000].iter().all(|&s| s == 7));
        assert!(fitted.samples[60_000..].iter().all(|&s| s == 0));

        let exact = clip_of(vec![3; 64_000]);
        assert_eq!(fit_to_capacity(&exact, 64_000), exact);
    }

    #[test]
    fn normalize_endpoints() {
        let mut s = vec![0i16; RAW_CAPACITY];
        s[1] = i16::MIN;
        s[2] = i16::MAX;
        let t = normalize_raw(&clip_of(s)).unwrap();
        assert_eq!(t.shape(), (255, 255, 3));
        assert_eq!(t.get(0, 0, 0), 0.5);
        assert_eq!(t.get(0, 0, 1), 0.0);
        assert_eq!(t.get(0, 0, 2), (32767.0f32 / 32768.0 + 1.0) / 2.0);
        assert!(normalize_raw(&clip_of(vec![0; 10])).is_err());
    }

    #[test]
    fn denormalize_midpoint_and_clamp() {
        let mut t = PlanarTensor::filled(255, 255, 3, 0.5f32);
        t.set(0, 0, 1, 1.2);
        t.set(0, 0, 2, -0.3);
        let c = denormalize_raw(&t, DEFAULT_SAMPLE_RATE).unwrap();
        assert_eq!(&c.samples[..3], &[0, 32767, -32768]);
        assert!(denormalize_raw(&PlanarTensor::zeros(255, 255, 2), DEFAULT_SAMPLE_RATE).is_err());
    }

    #[test]
    fn stereo_frames_average() {
        assert_eq!(mix_down(&[100, 300, -5, -6], 2), vec![200, -5]);
        assert_eq!(mix_down(&[1, 2, 3], 1), vec![1, 2, 3]);
    }

    #[test]
    fn wav_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let clip = clip_of((0..64_000).map(|i| ((i * 37) % 2000 - 1000) as i16).collect());
        save_wav(&clip, &p).unwrap();
        let back = load_wav(&p, DEFAULT_SAMPLE_RATE).unwrap();
        assert_eq!(back, clip);

        assert!(matches!(
            load_wav(&p, 44_100),
            Err(StegoError::SampleRateMismatch { expected: 44_100, found: 16_000 })
        ));

        let stereo = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&stereo, spec).unwrap();
        for s in [100i16, 300, 10, 20] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(load_wav(&stereo, 16_000).unwrap().samples, vec![200, 15]);

        let eight = dir.path().join("e.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 8,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&eight, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(load_wav(&eight, 16_000), Err(StegoError::UnsupportedEncoding(_))));

        let junk = dir.path().join("j.wav");
        std::fs::write(&junk, b"definitely not riff").unwrap();
        assert!(matches!(load_wav(&junk, 16_000), Err(StegoError::NotWav { .. })));
    }

    #[test]
    fn raw_capacity_is_twelve_seconds() {
        assert_eq!(RAW_CAPACITY, 195_075);
        let secs = RAW_CAPACITY as f64 / DEFAULT_SAMPLE_RATE as f64;
        assert!((secs - 12.19).abs() < 0.005);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn raw_round_trip_is_exact(seed in any::<u64>()) {
            let mut s = seed;
            let samples: Vec<i16> = (0..RAW_CAPACITY).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                (s >> 48) as u16 as i16
            }).collect();
            let clip = clip_of(samples);
            let t = normalize_raw(&clip).unwrap();
            prop_assert!(t.values().iter().all(|&v| (0.0..1.0).contains(&v)));
            prop_assert_eq!(denormalize_raw(&t, DEFAULT_SAMPLE_RATE).unwrap(), clip);
        }

        #[test]
        fn fit_preserves_prefix(len in 0usize..5000, cap in 1usize..5000) {
            let clip = clip_of((0..len).map(|i| i as i16).collect());
            let f = fit_to_capacity(&clip, cap);
            prop_assert_eq!(f.len(), cap);
            let keep = len.min(cap);
            prop_assert_eq!(&f.samples[..keep], &clip.samples[..keep]);
        }
    }
}
