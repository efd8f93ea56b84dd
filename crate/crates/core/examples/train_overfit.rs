//! Train on a fixed set of synthetic cover/speech pairs and watch the
//! hiding and reveal quality improve.
//!
//! cargo run --release --example train_overfit -- [steps] [pairs] [feature_maps] [beta] [raw|stft] [weights.bin]

use std::time::Instant;

use audiostego::audio::fit_to_capacity;
use audiostego::metrics::{mse_per_pixel_per_channel, pearson};
use audiostego::net::save_weights;
use audiostego::synth::{cover_image, speech_clip};
use audiostego::training::{Control, Example, LossWeights, Pairing, TrainConfig, TrainLog, Trainer};
use audiostego::{Method, SecretCodec, StegoNet};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn report(net: &StegoNet<f32>, codec: &SecretCodec, examples: &[Example], clips: &[audiostego::AudioClip]) -> (f64, f64) {
    let (mut r, mut mse) = (0.0, 0.0);
    for (ex, clip) in examples.iter().zip(clips) {
        let container = net.encode(&ex.cover, &ex.secret).unwrap();
        let revealed = codec.decode(&net.reveal_forward(&container).unwrap()).unwrap();
        r += pearson(&clip.as_f64(), &revealed.as_f64()).unwrap_or(0.0);
        mse += mse_per_pixel_per_channel(&ex.cover, &container).unwrap();
    }
    let n = examples.len() as f64;
    (r / n, mse / n)
}

fn main() -> audiostego::Result<()> {
    let steps: usize = arg(1, 200);
    let pairs: usize = arg(2, 8);
    let feature_maps: usize = arg(3, 4);
    let beta: f64 = arg(4, 1000.0);
    let method: Method = arg(5, Method::Stft);
    let out = std::env::args().nth(6);

    let cfg = TrainConfig {
        method,
        feature_maps,
        batch_size: 1,
        loss_weights: LossWeights::new(1.0, beta)?,
        epochs: usize::MAX,
        max_steps: Some(steps),
        pairing: Pairing::Fixed,
        ..TrainConfig::default()
    };
    let codec = cfg.codec()?;
    let clips: Vec<_> = (0..pairs as u64)
        .map(|i| fit_to_capacity(&speech_clip(100 + i, codec.capacity_samples(), 16_000), codec.capacity_samples()))
        .collect();
    let examples = clips
        .iter()
        .enumerate()
        .map(|(i, c)| Ok(Example { cover: cover_image(i as u64), secret: codec.encode(c)? }))
        .collect::<audiostego::Result<Vec<_>>>()?;

    let mut trainer = Trainer::new(cfg)?;
    let (r, mse) = report(trainer.net(), &codec, &examples, &clips);
    println!("{pairs} pairs, {method}, fm {feature_maps}, beta {beta}: start r {r:.4}, image mse {mse:.3e}");
    let start = Instant::now();
    let every = (steps / 10).max(1);
    trainer.fit(&examples, &[], &mut TrainLog::new(), |s, net| {
        if s.step % every == 0 {
            let (r, mse) = report(net, &codec, &examples, &clips);
            println!(
                "step {:5} {:7.1}s loss {:.3e} | mean r {r:.4} image mse {mse:.3e}",
                s.step,
                start.elapsed().as_secs_f64(),
                s.loss
            );
        }
        Control::Continue
    })?;
    if let Some(path) = out {
        save_weights(trainer.net(), &path)?;
        println!("weights written to {path}");
    }
    Ok(())
}
