//! STFT a synthetic 4 s utterance onto the 255×255×2 grid and back.
//!
//! cargo run --release --example dsp_roundtrip

use audiostego::metrics::pearson;
use audiostego::spectral::{istft, stft, StftParams};
use audiostego::synth::speech_clip;
use audiostego::Method;

fn main() -> audiostego::Result<()> {
    let params = StftParams::default();
    println!(
        "fft {} hop {} -> {} bins x {} frames",
        params.fft_size,
        params.hop,
        params.bins(),
        params.frames()
    );
    for m in [Method::Raw, Method::Stft] {
        println!(
            "{m}: {} samples, {:.2} s at 16 kHz",
            m.capacity_samples(&params),
            m.capacity_secs(&params, 16_000)
        );
    }

    let clip = speech_clip(7, params.expected_samples, 16_000);
    let spec = stft(&clip, &params)?;
    let back = istft(&spec, &params, 16_000)?;
    let r = pearson(&clip.as_f64(), &back.as_f64())?;
    let worst = clip.samples.iter().zip(&back.samples).map(|(a, b)| (a - b).unsigned_abs()).max().unwrap_or(0);
    println!("tensor {}, r = {r:.6}, worst sample error {worst} LSB", spec.shape_string());
    Ok(())
}
