//! Drive every subcommand of the command-line tool on a small synthetic
//! corpus in a scratch directory.
//!
//! cargo run --release --example cli_workflow -- [workdir]

use std::fs;
use std::path::Path;

use audiostego::audio::save_wav;
use audiostego::image_io::save_png;
use audiostego::lsb::ByteImage;
use audiostego::synth::{cover_image, speech_clip};

fn step(args: &[&str]) {
    println!("\n$ audiostego {}", args.join(" "));
    let code = audiostego::cli::run(std::iter::once("audiostego").chain(args.iter().copied()));
    println!("(exit {code})");
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::args().nth(1).unwrap_or_else(|| "audiostego_demo".into());
    let w = Path::new(&work);
    let (raw_img, raw_aud) = (w.join("raw/images"), w.join("raw/audio"));
    fs::create_dir_all(&raw_img)?;
    fs::create_dir_all(&raw_aud)?;
    for i in 0..10 {
        save_png(&ByteImage::from_tensor(&cover_image(i))?, raw_img.join(format!("cover{i:02}.png")))?;
        let secs = if i == 0 { 6 } else { 4 };
        save_wav(&speech_clip(i, secs * 16_000, 16_000), raw_aud.join(format!("speech{i:02}.wav")))?;
    }
    fs::write(w.join("train.cfg"), "feature_maps = 2\nbatch_size = 2\nepochs = 1\nbeta = 1000\n")?;

    let p = |rel: &str| w.join(rel).to_string_lossy().into_owned();
    step(&["ingest", "--images", &p("raw/images"), "--audio", &p("raw/audio"), "--out", &p("data")]);
    step(&["split", "--data", &p("data"), "--out", &p("split.tsv")]);
    step(&["train", "--split", &p("split.tsv"), "--out", &p("stft.bin"), "--config", &p("train.cfg"), "--max-steps", "3"]);
    let args = ["encode", "--cover", &p("data/images/cover03.png"), "--secret", &p("data/audio/speech00.wav"), "--weights", &p("stft.bin")];
    step(&[&args[..], &["--strict", "--out", &p("container.png")]].concat());
    step(&[&args[..], &["--out", &p("container.png")]].concat());
    step(&["decode", "--container", &p("container.png"), "--weights", &p("stft.bin"), "--out", &p("revealed.wav")]);
    step(&["eval", "--split", &p("split.tsv"), "--weights", &p("stft.bin"), "--out", &p("eval"), "--figures", "1"]);
    step(&["compare-lsb", "--split", &p("split.tsv")]);
    Ok(())
}
