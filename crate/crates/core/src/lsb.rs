//! Classical k-bit LSB embedding of PCM-16 audio into 8-bit RGB images.
//!
//! Payload: a 32-bit big-endian bit count, then every sample as 16 bits,
//! most significant bit first. Bits fill the `k` low bits of each channel
//! value in row-major, channel-fastest order; within a value the first
//! payload bit lands in bit `k - 1`.

use crate::audio::AudioClip;
use crate::error::{Result, StegoError};
use crate::tensor::PlanarTensor;

pub const HEADER_BITS: usize = 32;

/// Three-channel 8-bit image, row-major with channels fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByteImage {
    pub height: usize,
    pub width: usize,
    pub values: Vec<u8>,
}

impl ByteImage {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != height * width * Self::CHANNELS {
            return Err(StegoError::shape(
                format!("{} bytes for {height}x{width}x3", height * width * 3),
                format!("{} bytes", values.len()),
            ));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    /// Quantizes a [0, 1] tensor to 8 bits with rounding.
    pub fn from_tensor(t: &PlanarTensor<f32>) -> Result<Self> {
        if t.channels() != Self::CHANNELS {
            return Err(StegoError::shape("HxWx3", t.shape_string()));
        }
        let values = t
            .values()
            .iter()
            .map(|&v| (v as f64 * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        Self::new(t.height(), t.width(), values)
    }

    pub fn to_tensor(&self) -> PlanarTensor<f32> {
        PlanarTensor::new(
            self.height,
            self.width,
            Self::CHANNELS,
            self.values.iter().map(|&v| v as f32 / 255.0).collect(),
        )
        .expect("consistent dimensions")
    }
}

/// Payload bits available after the header, or 0 when the header alone
/// does not fit.
pub fn lsb_capacity(height: usize, width: usize, k: u32) -> Result<usize> {
    check_k(k)?;
    Ok((height * width * ByteImage::CHANNELS * k as usize).saturating_sub(HEADER_BITS))
}

fn check_k(k: u32) -> Result<()> {
    if !(1..=8).contains(&k) {
        return Err(StegoError::InvalidParams(format!("bits per channel k={k} must be in 1..=8")));
    }
    Ok(())
}

fn payload_bits(clip: &AudioClip) -> impl Iterator<Item = u8> + '_ {
    let body_bits = clip.len() as u32 * 16;
    (0..32)
        .rev()
        .map(move |b| ((body_bits >> b) & 1) as u8)
        .chain(
            clip.samples
                .iter()
                .flat_map(|&s| (0..16).rev().map(move |b| ((s as u16 >> b) & 1) as u8)),
        )
}

pub fn lsb_embed(cover: &ByteImage, clip: &AudioClip, k: u32) -> Result<ByteImage> {
    let available = lsb_capacity(cover.height, cover.width, k)?;
    let body = clip.len() * 16;
    let total_slots = cover.values.len() * k as usize;
    if body > available || HEADER_BITS > total_slots || clip.len() as u64 * 16 > u32::MAX as u64 {
        return Err(StegoError::PayloadTooLarge {
            required: body + HEADER_BITS,
            available: total_slots,
        });
    }
    let mut out = cover.clone();
    let k = k as usize;
    for (i, bit) in payload_bits(clip).enumerate() {
        let pos = k - 1 - i % k;
        let v = &mut out.values[i / k];
        *v = (*v & !(1 << pos)) | (bit << pos);
    }
    Ok(out)
}

pub fn lsb_extract(container: &ByteImage, k: u32, sample_rate: u32) -> Result<AudioClip> {
    check_k(k)?;
    let k = k as usize;
    let slots = container.values.len() * k;
    if slots < HEADER_BITS {
        return Err(StegoError::InvalidHeader(format!("image holds only {slots} bits")));
    }
    let bit = |i: usize| (container.values[i / k] >> (k - 1 - i % k)) & 1;
    let header = (0..HEADER_BITS).fold(0usize, |acc, i| (acc << 1) | bit(i) as usize);
    let available = slots - HEADER_BITS;
    if header > available {
        return Err(StegoError::InvalidHeader(format!(
            "declares {header} bits, capacity is {available}"
        )));
    }
    if header % 16 != 0 {
        return Err(StegoError::InvalidHeader(format!(
            "declares {header} bits, not a whole number of samples"
        )));
    }
    let samples = (0..header / 16)
        .map(|s| {
            let base = HEADER_BITS + s * 16;
            (0..16).fold(0u16, |acc, b| (acc << 1) | bit(base + b) as u16) as i16
        })
        .collect();
    AudioClip::new(samples, sample_rate)
}
