//! Deterministic synthetic data: speech-like clips and photo-like covers.
//!
//! Used by the examples and test suites in place of downloaded corpora.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{AudioClip, IMAGE_SIDE};
use crate::tensor::PlanarTensor;

/// Voiced syllables over a moving pitch contour, shaped by three formant
/// resonances, with short fricative bursts and pauses. Peak-normalized to
/// 0.9 of full scale.
pub fn speech_clip(seed: u64, len: usize, sample_rate: u32) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let base_f0 = rng.gen_range(95.0..210.0);
    let mut out = vec![0.0f64; len];

    let mut t = rng.gen_range(0.0..0.15);
    let total = len as f64 / sr;
    let mut phase = 0.0f64;
    while t < total {
        let dur = rng.gen_range(0.12..0.32);
        let formants = [
            rng.gen_range(300.0..850.0),
            rng.gen_range(850.0..2300.0),
            rng.gen_range(2300.0..3200.0),
        ];
        let glide = rng.gen_range(-0.25..0.25);
        let fricative = rng.gen_bool(0.3);
        let start = (t * sr) as usize;
        let end = (((t + dur) * sr) as usize).min(len);
        let mut lp = 0.0f64;
        for (i, sample) in out.iter_mut().enumerate().take(end).skip(start) {
            let u = (i - start) as f64 / (end - start).max(1) as f64;
            let env = (PI * u).sin().powf(0.6);
            let f0 = base_f0 * (1.0 + glide * (u - 0.5)) * (1.0 + 0.03 * (2.0 * PI * 5.0 * i as f64 / sr).sin());
            phase += 2.0 * PI * f0 / sr;
            let mut v = 0.0;
            let mut h = 1;
            while (h as f64) * f0 < 3800.0 {
                let f = h as f64 * f0;
                let gain: f64 = formants
                    .iter()
                    .enumerate()
                    .map(|(j, &fc)| {
                        let bw = 80.0 + 60.0 * j as f64;
                        (1.0 / (1.0 + ((f - fc) / bw).powi(2))) / (1.0 + j as f64)
                    })
                    .sum();
                v += gain * (h as f64 * phase).sin() / (h as f64).sqrt();
                h += 1;
            }
            if fricative && u > 0.7 {
                let n: f64 = rng.gen_range(-1.0..1.0);
                let hp = n - lp;
                lp = n;
                v += 0.3 * hp;
            }
            *sample += env * v;
        }
        t += dur + rng.gen_range(0.02..0.12);
        if rng.gen_bool(0.15) {
            t += rng.gen_range(0.1..0.3);
        }
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut out {
            *v *= 0.9 / peak;
        }
    }
    AudioClip::from_normalized(&out, sample_rate)
}

/// A 255×255 photo-like cover on the [0, 1] scale, quantized to 8-bit
/// levels: a sky-style vertical gradient, soft elliptical objects, and
/// gentle texture.
pub fn cover_image(seed: u64) -> PlanarTensor<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let n = IMAGE_SIDE;
    let top: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.2..0.9));
    let bottom: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.1..0.8));
    let blobs: Vec<([f64; 2], [f64; 2], [f64; 3], f64)> = (0..rng.gen_range(2..6))
        .map(|_| {
            (
                [rng.gen_range(0.0..n as f64), rng.gen_range(0.0..n as f64)],
                [rng.gen_range(15.0..80.0), rng.gen_range(15.0..80.0)],
                std::array::from_fn(|_| rng.gen_range(0.05..0.95)),
                rng.gen_range(0.5..0.95),
            )
        })
        .collect();
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.01..0.08),
                rng.gen_range(0.01..0.08),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.005..0.03),
            )
        })
        .collect();

    PlanarTensor::from_fn(n, n, 3, |y, x, c| {
        let v = y as f64 / (n - 1) as f64;
        let mut p = top[c] * (1.0 - v) + bottom[c] * v;
        for (centre, radius, colour, opacity) in &blobs {
            let dy = (y as f64 - centre[0]) / radius[0];
            let dx = (x as f64 - centre[1]) / radius[1];
            let d = (dy * dy + dx * dx).sqrt();
            let a = opacity / (1.0 + ((d - 1.0) * 6.0).exp());
            p = p * (1.0 - a) + colour[c] * a;
        }
        for &(fy, fx, ph, amp) in &waves {
            p += amp * (fy * y as f64 * 2.0 * PI + fx * x as f64 * 2.0 * PI + ph + c as f64).sin();
        }
        ((p.clamp(0.0, 1.0) * 255.0).round() / 255.0) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = speech_clip(3, 16_000, 16_000);
        assert_eq!(a, speech_clip(3, 16_000, 16_000));
        assert_ne!(a, speech_clip(4, 16_000, 16_000));
        let peak = a.samples.iter().map(|s| s.unsigned_abs()).max().unwrap();
        assert!(peak > 28_000);

        let c = cover_image(9);
        assert_eq!(c.shape(), (255, 255, 3));
        assert!(c.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(c, cover_image(9));
    }
}
