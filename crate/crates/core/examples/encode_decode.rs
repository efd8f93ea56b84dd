//! Hide a WAV clip in a PNG cover and reveal it again, writing the
//! container and the revealed clip. Without arguments a synthetic cover,
//! clip, and freshly initialized network are used.
//!
//! cargo run --release --example encode_decode -- [cover.png secret.wav weights.bin]

use audiostego::audio::{fit_to_capacity, load_wav, save_wav};
use audiostego::image_io::{load_cover, save_png};
use audiostego::metrics::PairMetrics;
use audiostego::net::{load_weights, Architecture};
use audiostego::pipeline::{decode_image, encode_tensors};
use audiostego::synth::{cover_image, speech_clip};
use audiostego::{Method, SecretCodec, StegoNet, StftParams};

fn main() -> audiostego::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (cover, clip, net) = match &args[..] {
        [c, s, w] => (load_cover(c)?, load_wav(s, 16_000)?, load_weights(w, None)?),
        _ => {
            println!("no inputs given; using synthetic data and untrained weights");
            let net = StegoNet::init(Architecture::for_secret(Method::Stft.secret_channels(), 4), 0)?;
            (cover_image(5), speech_clip(5, 80_000, 16_000), net)
        }
    };
    let method = if net.architecture().secret_channels() == 2 { Method::Stft } else { Method::Raw };
    let codec = SecretCodec::new(method, StftParams::default(), 16_000)?;

    let encoded = encode_tensors(&net, &codec, &cover, &clip, false)?;
    if let Some(n) = encoded.truncated_from {
        println!("clip of {n} samples cut to the {} sample capacity", encoded.capacity);
    }
    save_png(&encoded.container, "container.png")?;
    let revealed = decode_image(&net, &codec, &encoded.container)?;
    save_wav(&revealed, "revealed.wav")?;

    let secret = fit_to_capacity(&clip, codec.capacity_samples());
    let m = PairMetrics::measure(&cover, &encoded.container.to_tensor(), &secret, &revealed)?;
    let r = m.audio_r.map_or("undefined".to_string(), |r| format!("{r:.4}"));
    println!("{method}: image mse {:.3e}, audio r {r}, audio rms {:.3e}", m.image_mse, m.audio_rms);
    println!("wrote container.png and revealed.wav");
    Ok(())
}
