//! File-level operations behind the command-line tool: ingestion,
//! splitting, training, encode/decode, evaluation, and the LSB comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::audio::{self, AudioClip};
use crate::codec::{Method, SecretCodec};
use crate::error::{Result, StegoError};
use crate::image_io;
use crate::lsb::{self, ByteImage};
use crate::metrics::{self, MetricsReport, PairMetrics};
use crate::net::{load_weights, save_weights, StegoNet};
use crate::spectral::StftParams;
use crate::training::{self, DataSplit, FitOutcome, TrainConfig, TrainLog};

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssetKind {
    Image,
    Audio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub original: PathBuf,
    pub processed: PathBuf,
    pub kind: AssetKind,
    /// `WxH` for images, seconds for audio.
    pub info: String,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestManifest {
    pub entries: Vec<ManifestEntry>,
    pub errors: Vec<(PathBuf, String)>,
}

impl IngestManifest {
    pub fn images(&self) -> Vec<PathBuf> {
        self.processed(AssetKind::Image)
    }

    pub fn audio(&self) -> Vec<PathBuf> {
        self.processed(AssetKind::Audio)
    }

    fn processed(&self, kind: AssetKind) -> Vec<PathBuf> {
        self.entries
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.processed.clone())
            .collect()
    }

    /// Tab-separated rows, then an `# errors` section.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("original\tprocessed\tkind\tinfo\tnote\n");
        for e in &self.entries {
            let kind = match e.kind {
                AssetKind::Image => "image",
                AssetKind::Audio => "audio",
            };
            writeln!(
                s,
                "{}\t{}\t{kind}\t{}\t{}",
                e.original.display(),
                e.processed.display(),
                e.info,
                e.note.as_deref().unwrap_or("")
            )
            .unwrap();
        }
        s.push_str("# errors\n");
        for (p, reason) in &self.errors {
            writeln!(s, "{}\t{reason}", p.display()).unwrap();
        }
        s
    }
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| StegoError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

fn has_extension(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| StegoError::io(dir, e))
}

/// Converts every image to a 255×255 RGB PNG and every WAV to mono PCM-16
/// under `out_dir/images` and `out_dir/audio`, then writes
/// `out_dir/manifest.tsv`. Unreadable files are listed, not fatal.
pub fn ingest(
    images_dir: &Path,
    audio_dir: &Path,
    out_dir: &Path,
    codec: &SecretCodec,
) -> Result<IngestManifest> {
    let (img_out, aud_out) = (out_dir.join("images"), out_dir.join("audio"));
    create_dir(&img_out)?;
    create_dir(&aud_out)?;
    let mut manifest = IngestManifest::default();

    for path in sorted_files(images_dir)? {
        if !has_extension(&path, IMAGE_EXTENSIONS) {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let processed = img_out.join(format!("{stem}.png"));
        let result = image_io::load_rgb(&path).and_then(|rgb| {
            let (w, h) = rgb.dimensions();
            let bytes = image_io::rgb_to_bytes(&image_io::resize_to_grid(&rgb));
            image_io::save_png(&bytes, &processed)?;
            Ok(format!("{w}x{h}"))
        });
        match result {
            Ok(info) => manifest.entries.push(ManifestEntry {
                original: path,
                processed,
                kind: AssetKind::Image,
                info,
                note: None,
            }),
            Err(e) => manifest.errors.push((path, e.to_string())),
        }
    }

    for path in sorted_files(audio_dir)? {
        if !has_extension(&path, &["wav"]) {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let processed = aud_out.join(format!("{stem}.wav"));
        let result = audio::load_wav(&path, codec.sample_rate).and_then(|clip| {
            audio::save_wav(&clip, &processed)?;
            Ok(clip)
        });
        match result {
            Ok(clip) => {
                let note = (clip.len() > codec.capacity_samples()).then(|| {
                    format!(
                        "exceeds {:.2} s capacity; will be truncated at encode time",
                        codec.capacity_secs()
                    )
                });
                manifest.entries.push(ManifestEntry {
                    original: path,
                    processed,
                    kind: AssetKind::Audio,
                    info: format!("{:.3}s", clip.duration_secs()),
                    note,
                });
            }
            Err(e) => manifest.errors.push((path, e.to_string())),
        }
    }

    let manifest_path = out_dir.join("manifest.tsv");
    fs::write(&manifest_path, manifest.to_tsv()).map_err(|e| StegoError::io(&manifest_path, e))?;
    Ok(manifest)
}

/// Lists the PNGs under `dir/images` and WAVs under `dir/audio`.
pub fn ingested_files(dir: &Path) -> Result<(Vec<PathBuf>, Vec<PathBuf>)> {
    let images = sorted_files(&dir.join("images"))?
        .into_iter()
        .filter(|p| has_extension(p, &["png"]))
        .collect();
    let audio = sorted_files(&dir.join("audio"))?
        .into_iter()
        .filter(|p| has_extension(p, &["wav"]))
        .collect();
    Ok((images, audio))
}

/// Split file: one `set<TAB>image<TAB>audio` line per pair.
pub fn split_to_text(split: &DataSplit) -> String {
    let mut s = String::new();
    for (name, pairs) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        for (i, a) in pairs {
            writeln!(s, "{name}\t{}\t{}", i.display(), a.display()).unwrap();
        }
    }
    s
}

pub fn split_from_text(text: &str) -> Result<DataSplit> {
    let mut split = DataSplit::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [set, image, audio] = fields[..] else {
            return Err(StegoError::Usage(format!("split line {}: expected 3 tab-separated fields", n + 1)));
        };
        let pair = (PathBuf::from(image), PathBuf::from(audio));
        match set {
            "train" => split.train.push(pair),
            "validation" => split.validation.push(pair),
            "test" => split.test.push(pair),
            other => return Err(StegoError::Usage(format!("split line {}: unknown set '{other}'", n + 1))),
        }
    }
    Ok(split)
}

pub fn save_split(split: &DataSplit, path: &Path) -> Result<()> {
    fs::write(path, split_to_text(split)).map_err(|e| StegoError::io(path, e))
}

pub fn load_split(path: &Path) -> Result<DataSplit> {
    split_from_text(&fs::read_to_string(path).map_err(|e| StegoError::io(path, e))?)
}

/// Trains on a split file's pairs and writes the best weights to `out`
/// and the log beside it as `<out>.log`.
pub fn train_to_file(split: &DataSplit, config: &TrainConfig, out: &Path) -> Result<(FitOutcome, TrainLog)> {
    let log_path = out.with_extension("log");
    let (outcome, log) = training::train(split, config, Some(&log_path))?;
    save_weights(&outcome.best, out)?;
    Ok((outcome, log))
}

/// Loads weights and checks they were trained for `method`.
pub fn load_method_weights(path: &Path, method: Method) -> Result<StegoNet<f32>> {
    let net = load_weights(path, None)?;
    let found = net.architecture().secret_channels();
    if found != method.secret_channels() {
        return Err(StegoError::ArchitectureMismatch(format!(
            "weights carry {found} secret channels, method {method} needs {}",
            method.secret_channels()
        )));
    }
    Ok(net)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodeOutcome {
    pub container: ByteImage,
    /// Original length when the clip was cut to capacity.
    pub truncated_from: Option<usize>,
    pub capacity: usize,
}

/// Hides `clip` in `cover` and returns the 8-bit container. With `strict`,
/// a clip longer than capacity is refused instead of truncated.
pub fn encode_tensors(
    net: &StegoNet<f32>,
    codec: &SecretCodec,
    cover: &crate::PlanarTensor<f32>,
    clip: &AudioClip,
    strict: bool,
) -> Result<EncodeOutcome> {
    let capacity = codec.capacity_samples();
    if clip.len() > capacity && strict {
        return Err(StegoError::CapacityExceeded {
            samples: clip.len(),
            capacity,
        });
    }
    let secret = codec.encode(clip)?;
    let container = ByteImage::from_tensor(&net.encode(cover, &secret)?)?;
    Ok(EncodeOutcome {
        container,
        truncated_from: (clip.len() > capacity).then_some(clip.len()),
        capacity,
    })
}

pub fn encode_files(
    cover: &Path,
    secret: &Path,
    weights: &Path,
    codec: &SecretCodec,
    strict: bool,
    out: &Path,
) -> Result<EncodeOutcome> {
    image_io::require_png(out)?;
    let net = load_method_weights(weights, codec.method)?;
    let cover = image_io::load_cover(cover)?;
    let clip = audio::load_wav(secret, codec.sample_rate)?;
    let outcome = encode_tensors(&net, codec, &cover, &clip, strict)?;
    image_io::save_png(&outcome.container, out)?;
    Ok(outcome)
}

/// Reveals the secret from an 8-bit container.
pub fn decode_image(net: &StegoNet<f32>, codec: &SecretCodec, container: &ByteImage) -> Result<AudioClip> {
    codec.decode(&net.reveal_forward(&container.to_tensor())?)
}

pub fn decode_files(container: &Path, weights: &Path, codec: &SecretCodec, out: &Path) -> Result<AudioClip> {
    let net = load_method_weights(weights, codec.method)?;
    let clip = decode_image(&net, codec, &image_io::load_byte_image(container)?)?;
    audio::save_wav(&clip, out)?;
    Ok(clip)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub method: Method,
    /// Reveal applied to the unquantized container.
    pub float_path: MetricsReport,
    /// Reveal applied to the container after 8-bit quantization.
    pub quantized_path: MetricsReport,
    /// All-zero weights: mid-grey container, silent reveal.
    pub trivial_baseline: MetricsReport,
    pub failures: Vec<(usize, String)>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("method: {}\nfailures: {}\n", self.method, self.failures.len());
        for (i, e) in &self.failures {
            writeln!(s, "  pair {i}: {e}").unwrap();
        }
        s.push('\n');
        s += &self.trivial_baseline.to_text("trivial baseline (zero weights)");
        s.push('\n');
        s += &self.float_path.to_text("float path");
        s.push('\n');
        s += &self.quantized_path.to_text("8-bit path");
        s
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!("method={}\nfailures={}\n", self.method, self.failures.len());
        s += &self.trivial_baseline.to_kv("baseline");
        s += &self.float_path.to_kv("float");
        s += &self.quantized_path.to_kv("quantized");
        s
    }
}

struct PairResult {
    float: PairMetrics,
    quantized: PairMetrics,
    baseline: PairMetrics,
    secret: AudioClip,
    revealed: AudioClip,
}

fn evaluate_pair(
    net: &StegoNet<f32>,
    trivial: &StegoNet<f32>,
    codec: &SecretCodec,
    cover: &crate::PlanarTensor<f32>,
    clip: &AudioClip,
) -> Result<PairResult> {
    let secret_clip = audio::fit_to_capacity(clip, codec.capacity_samples());
    let secret = codec.encode(&secret_clip)?;
    let run = |net: &StegoNet<f32>| -> Result<(PairMetrics, PairMetrics, AudioClip)> {
        let container = net.encode(cover, &secret)?;
        let float_clip = codec.decode(&net.reveal_forward(&container)?)?;
        let float = PairMetrics::measure(cover, &container, &secret_clip, &float_clip)?;
        let bytes = ByteImage::from_tensor(&container)?;
        let q_clip = decode_image(net, codec, &bytes)?;
        let quantized = PairMetrics::measure(cover, &bytes.to_tensor(), &secret_clip, &q_clip)?;
        Ok((float, quantized, q_clip))
    };
    let (float, quantized, revealed) = run(net)?;
    let (baseline, _, _) = run(trivial)?;
    Ok(PairResult {
        float,
        quantized,
        baseline,
        secret: secret_clip,
        revealed,
    })
}

/// Encodes and decodes every test pair. Per-pair failures are counted and
/// evaluation continues. When `figures` is given, spectrogram difference
/// images of the first `n` successful pairs are written there.
pub fn evaluate(
    net: &StegoNet<f32>,
    codec: &SecretCodec,
    pairs: &[(PathBuf, PathBuf)],
    figures: Option<(&Path, usize)>,
) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(StegoError::EmptyInput("test split"));
    }
    let trivial = StegoNet::zeros(net.architecture())?;
    let (mut float, mut quantized, mut baseline, mut failures) = (vec![], vec![], vec![], vec![]);
    if let Some((dir, _)) = figures {
        create_dir(dir)?;
    }
    for (index, (image, wav)) in pairs.iter().enumerate() {
        let result = image_io::load_cover(image)
            .and_then(|cover| Ok((cover, audio::load_wav(wav, codec.sample_rate)?)))
            .and_then(|(cover, clip)| evaluate_pair(net, &trivial, codec, &cover, &clip));
        match result {
            Ok(r) => {
                if let Some((dir, n)) = figures {
                    if float.len() < n {
                        let stft = StftParams {
                            expected_samples: r.secret.len(),
                            ..codec.stft
                        };
                        let fig = spectral_figure(&r.secret, &r.revealed, &stft, codec)?;
                        image_io::save_gray_png(&fig, dir.join(format!("diff_{index:04}.png")))?;
                    }
                }
                float.push(r.float);
                quantized.push(r.quantized);
                baseline.push(r.baseline);
            }
            Err(e) => failures.push((index, e.to_string())),
        }
    }
    Ok(EvalReport {
        method: codec.method,
        float_path: MetricsReport::from_pairs(float),
        quantized_path: MetricsReport::from_pairs(quantized),
        trivial_baseline: MetricsReport::from_pairs(baseline),
        failures,
    })
}

/// Difference figure over the STFT grid; raw-method clips are cut to the
/// grid's sample count first.
fn spectral_figure(
    s: &AudioClip,
    o: &AudioClip,
    stft: &StftParams,
    codec: &SecretCodec,
) -> Result<crate::PlanarTensor<f32>> {
    if stft.validate().is_ok() {
        return metrics::spectrogram_diff_image(s, o, stft);
    }
    let n = codec.stft.expected_samples;
    metrics::spectrogram_diff_image(
        &audio::fit_to_capacity(s, n),
        &audio::fit_to_capacity(o, n),
        &codec.stft,
    )
}

/// Writes `report.txt` and `report.kv` into `dir`.
pub fn write_eval_report(report: &EvalReport, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    metrics::write_text(dir.join("report.txt"), &report.to_text())?;
    metrics::write_text(dir.join("report.kv"), &report.to_kv())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsbRow {
    pub k: u32,
    pub capacity_bits: usize,
    pub capacity_secs: f64,
    pub image_mse: f64,
    /// Mean over pairs with a defined correlation.
    pub audio_r: Option<f64>,
    pub bit_exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsbComparison {
    pub rows: Vec<LsbRow>,
    pub raw_capacity_secs: f64,
    pub stft_capacity_secs: f64,
    pub pair_count: usize,
}

impl LsbComparison {
    pub fn to_text(&self) -> String {
        let mut s = format!("pairs: {}\n", self.pair_count);
        writeln!(s, "{:<10} {:>12} {:>12} {:>10} {:>9}", "method", "capacity_s", "image_mse", "audio_r", "lossless").unwrap();
        for r in &self.rows {
            let ar = r.audio_r.map_or("undefined".into(), |v| format!("{v:.6}"));
            writeln!(
                s,
                "{:<10} {:>12.3} {:>12.6e} {:>10} {:>9}",
                format!("lsb k={}", r.k),
                r.capacity_secs,
                r.image_mse,
                ar,
                r.bit_exact
            )
            .unwrap();
        }
        writeln!(s, "{:<10} {:>12.3}", "dnn raw", self.raw_capacity_secs).unwrap();
        writeln!(s, "{:<10} {:>12.3}", "dnn stft", self.stft_capacity_secs).unwrap();
        s
    }
}

/// Embeds each clip (cut to the k-bit capacity) into its paired cover for
/// every `k`, then extracts and measures.
pub fn compare_lsb(
    pairs: &[(ByteImage, AudioClip)],
    ks: &[u32],
    sample_rate: u32,
) -> Result<LsbComparison> {
    if pairs.is_empty() {
        return Err(StegoError::EmptyInput("LSB comparison pairs"));
    }
    let stft = StftParams::default();
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut per_pair = Vec::with_capacity(pairs.len());
        let mut bit_exact = true;
        let mut capacity_bits = 0;
        for (index, (cover, clip)) in pairs.iter().enumerate() {
            let wrap = |e| StegoError::Pair {
                index,
                source: Box::new(e),
            };
            capacity_bits = lsb::lsb_capacity(cover.height, cover.width, k).map_err(wrap)?;
            let fitted = AudioClip::new(clip.samples[..clip.len().min(capacity_bits / 16)].to_vec(), sample_rate)?;
            let container = lsb::lsb_embed(cover, &fitted, k).map_err(wrap)?;
            let revealed = lsb::lsb_extract(&container, k, sample_rate).map_err(wrap)?;
            bit_exact &= revealed == fitted;
            per_pair.push(
                PairMetrics::measure(&cover.to_tensor(), &container.to_tensor(), &fitted, &revealed)
                    .map_err(wrap)?,
            );
        }
        let report = MetricsReport::from_pairs(per_pair);
        rows.push(LsbRow {
            k,
            capacity_bits,
            capacity_secs: (capacity_bits / 16) as f64 / sample_rate as f64,
            image_mse: report.sse / report.pair_count as f64,
            audio_r: report.mean_correlation,
            bit_exact,
        });
    }
    Ok(LsbComparison {
        rows,
        raw_capacity_secs: Method::Raw.capacity_secs(&stft, sample_rate),
        stft_capacity_secs: Method::Stft.capacity_secs(&stft, sample_rate),
        pair_count: pairs.len(),
    })
}

pub fn compare_lsb_files(pairs: &[(PathBuf, PathBuf)], ks: &[u32], sample_rate: u32) -> Result<LsbComparison> {
    let loaded = pairs
        .iter()
        .enumerate()
        .map(|(index, (i, a))| {
            let load = || -> Result<(ByteImage, AudioClip)> {
                let rgb = image_io::resize_to_grid(&image_io::load_rgb(i)?);
                Ok((image_io::rgb_to_bytes(&rgb), audio::load_wav(a, sample_rate)?))
            };
            load().map_err(|e| StegoError::Pair {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    compare_lsb(&loaded, ks, sample_rate)
}
