//! Image SSE, audio correlation, and a spectrogram difference figure for a
//! clip degraded with a little noise.
//!
//! cargo run --release --example metrics_report -- [out.png]

use audiostego::image_io::save_gray_png;
use audiostego::metrics::{pearson, spectrogram_diff_image, MetricsReport, PairMetrics};
use audiostego::spectral::StftParams;
use audiostego::synth::{cover_image, speech_clip};
use audiostego::AudioClip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> audiostego::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "spectrogram_diff.png".into());
    println!("r([1,2,3], [1,3,2]) = {}", pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0])?);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = StftParams::default();
    let mut pairs = Vec::new();
    let mut last = None;
    for (i, noise) in [0.002, 0.01, 0.05].into_iter().enumerate() {
        let cover = cover_image(i as u64);
        let mut container = cover.clone();
        for v in container.values_mut() {
            *v = (*v + rng.gen_range(-noise..noise) as f32).clamp(0.0, 1.0);
        }
        let secret = speech_clip(i as u64, params.expected_samples, 16_000);
        let noisy: Vec<f64> = secret.to_normalized().iter().map(|v| v + rng.gen_range(-noise..noise)).collect();
        let revealed = AudioClip::from_normalized(&noisy, 16_000);
        pairs.push(PairMetrics::measure(&cover, &container, &secret, &revealed)?);
        last = Some((secret, revealed));
    }
    print!("{}", MetricsReport::from_pairs(pairs).to_text("noisy pairs"));

    let (s, o) = last.unwrap();
    save_gray_png(&spectrogram_diff_image(&s, &o, &params)?, &out)?;
    println!("difference figure written to {out}");
    Ok(())
}
