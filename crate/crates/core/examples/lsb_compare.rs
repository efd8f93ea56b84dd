//! k-bit LSB embedding of a synthetic clip at every k, with capacity and
//! image distortion per k.
//!
//! cargo run --release --example lsb_compare

use audiostego::lsb::{lsb_capacity, lsb_embed, lsb_extract, ByteImage};
use audiostego::metrics::mse_per_pixel_per_channel;
use audiostego::synth::{cover_image, speech_clip};
use audiostego::AudioClip;

fn main() -> audiostego::Result<()> {
    let cover = ByteImage::from_tensor(&cover_image(1))?;
    let speech = speech_clip(2, 16_000 * 30, 16_000);
    println!("{:>2} {:>10} {:>8} {:>12} {:>9}", "k", "bits", "secs", "image_mse", "lossless");
    for k in 1..=8 {
        let bits = lsb_capacity(cover.height, cover.width, k)?;
        let clip = AudioClip::new(speech.samples[..bits / 16].to_vec(), 16_000)?;
        let container = lsb_embed(&cover, &clip, k)?;
        let back = lsb_extract(&container, k, 16_000)?;
        let mse = mse_per_pixel_per_channel(&cover.to_tensor(), &container.to_tensor())?;
        println!("{k:>2} {bits:>10} {:>8.2} {mse:>12.3e} {:>9}", clip.duration_secs(), back == clip);
    }

    let too_long = lsb_embed(&ByteImage::new(4, 4, vec![0; 48])?, &speech, 1);
    println!("4x4 cover: {}", too_long.unwrap_err());
    Ok(())
}
