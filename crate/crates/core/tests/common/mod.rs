//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use audiostego::net::{BaseModel, Conv2d, OutputActivation, StegoNet, Tape, BRANCH_DEPTH, KERNEL_SIZES};
use audiostego::training::{joint_loss_gradient, LossWeights};
use audiostego::PlanarTensor;

/// Direct evaluation of the convolution sum with zero padding of `k / 2`
/// before each axis. Planar in and out.
pub fn naive_conv(layer: &Conv2d<f64>, input: &[f64], h: usize, w: usize) -> Vec<f64> {
    let k = layer.kernel;
    let lo = (k / 2) as isize;
    let mut out = vec![0.0; layer.out_channels * h * w];
    for o in 0..layer.out_channels {
        for y in 0..h {
            for x in 0..w {
                let mut acc = layer.bias[o];
                let ky_range = (lo - y as isize).max(0) as usize..(h as isize + lo - y as isize).min(k as isize) as usize;
                let kx_range = (lo - x as isize).max(0) as usize..(w as isize + lo - x as isize).min(k as isize) as usize;
                for c in 0..layer.in_channels {
                    for ky in ky_range.clone() {
                        let iy = y + ky - lo as usize;
                        for kx in kx_range.clone() {
                            let ix = x + kx - lo as usize;
                            let wv = layer.weight[((o * layer.in_channels + c) * k + ky) * k + kx];
                            acc += wv * input[(c * h + iy) * w + ix];
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    out
}

/// ReLU gating. In frozen mode, each rectifier reuses the on/off pattern
/// recorded at a reference point, which makes the network smooth in the
/// parameters while agreeing with it on the reference point's region.
#[derive(Default)]
pub struct Masks<'a> {
    pub frozen: Option<&'a [Vec<bool>]>,
    pub seen: Vec<Vec<bool>>,
    cursor: usize,
    /// Set when a frozen gate disagrees with the sign actually computed.
    pub flipped: bool,
}

impl<'a> Masks<'a> {
    pub fn frozen(patterns: &'a [Vec<bool>]) -> Self {
        Self {
            frozen: Some(patterns),
            ..Self::default()
        }
    }

    fn rectify(&mut self, v: &mut [f64]) {
        match self.frozen {
            Some(p) => {
                for (x, &on) in v.iter_mut().zip(&p[self.cursor]) {
                    self.flipped |= (*x > 0.0) != on;
                    if !on {
                        *x = 0.0;
                    }
                }
            }
            None => {
                self.seen.push(v.iter().map(|&x| x > 0.0).collect());
                for x in v.iter_mut() {
                    *x = x.max(0.0);
                }
            }
        }
        self.cursor += 1;
    }
}

fn naive_base(model: &BaseModel<f64>, input: &[f64], h: usize, w: usize, masks: &mut Masks) -> Vec<f64> {
    let layers = model.layers();
    let mut stage1 = Vec::new();
    for b in 0..KERNEL_SIZES.len() {
        let mut act = input.to_vec();
        for l in 0..BRANCH_DEPTH {
            act = naive_conv(&layers[b * BRANCH_DEPTH + l], &act, h, w);
            masks.rectify(&mut act);
        }
        stage1.extend(act);
    }
    let offset = KERNEL_SIZES.len() * BRANCH_DEPTH;
    let mut stage2 = Vec::new();
    for b in 0..KERNEL_SIZES.len() {
        let mut y = naive_conv(&layers[offset + b], &stage1, h, w);
        masks.rectify(&mut y);
        stage2.extend(y);
    }
    let mut out = naive_conv(&layers[offset + KERNEL_SIZES.len()], &stage2, h, w);
    match model.config().output_activation {
        OutputActivation::Relu => masks.rectify(&mut out),
        OutputActivation::Logistic => {
            for v in &mut out {
                *v = 1.0 / (1.0 + (-*v).exp());
            }
        }
        OutputActivation::Linear => {}
    }
    out
}

pub fn planes(t: &PlanarTensor<f64>) -> Vec<f64> {
    let (h, w, c) = t.shape();
    let mut p = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                p[(ch * h + y) * w + x] = t.get(y, x, ch);
            }
        }
    }
    p
}

/// Container and revealed planes from the naive implementation.
pub fn naive_forward(
    net: &StegoNet<f64>,
    cover: &PlanarTensor<f64>,
    secret: &PlanarTensor<f64>,
    masks: &mut Masks,
) -> (Vec<f64>, Vec<f64>) {
    let (h, w, _) = cover.shape();
    let features = naive_base(&net.prepare, &planes(secret), h, w, masks);
    let mut hide_in = planes(cover);
    hide_in.extend(features);
    let container = naive_base(&net.hide, &hide_in, h, w, masks);
    let revealed = naive_base(&net.reveal, &container, h, w, masks);
    (container, revealed)
}

/// `(wa * sum (C - H)^2 / n + wb * sum (S - O)^2 / m)` written out directly.
pub fn naive_loss(
    net: &StegoNet<f64>,
    cover: &PlanarTensor<f64>,
    secret: &PlanarTensor<f64>,
    w: &LossWeights,
    masks: &mut Masks,
) -> f64 {
    let (container, revealed) = naive_forward(net, cover, secret, masks);
    let c = planes(cover);
    let s = planes(secret);
    let img: f64 = c.iter().zip(&container).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / c.len() as f64;
    let aud: f64 = s.iter().zip(&revealed).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / s.len() as f64;
    let total = w.alpha() + w.beta();
    w.alpha() / total * img + w.beta() / total * aud
}

/// Reverse-mode gradient from the library, flattened in `params()` order.
pub fn library_gradient(
    net: &StegoNet<f64>,
    cover: &PlanarTensor<f64>,
    secret: &PlanarTensor<f64>,
    w: &LossWeights,
    scale: f64,
) -> Vec<f64> {
    let mut tape = Tape::new();
    let out = net.forward_recorded(cover, secret, &mut tape).unwrap();
    let g = joint_loss_gradient(cover, &out.container, secret, &out.revealed, w, scale).unwrap();
    let mut grads = StegoNet::zeros(net.architecture()).unwrap();
    net.backward(&tape, &g.d_container, &g.d_revealed, &mut grads).unwrap();
    grads.params().copied().collect()
}

/// Mutable access to parameter `index` in `params()` order: networks in
/// prepare, hide, reveal order, each layer's weights then bias.
pub fn param_mut(net: &mut StegoNet<f64>, mut index: usize) -> &mut f64 {
    for model in net.networks_mut() {
        for layer in model.layers_mut() {
            if index < layer.weight.len() {
                return &mut layer.weight[index];
            }
            index -= layer.weight.len();
            if index < layer.bias.len() {
                return &mut layer.bias[index];
            }
            index -= layer.bias.len();
        }
    }
    panic!("parameter index out of range");
}

pub fn set_param(net: &mut StegoNet<f64>, index: usize, value: f64) {
    *param_mut(net, index) = value;
}

#[derive(Debug, Default)]
pub struct GradCheck {
    pub params: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub failures: usize,
    /// Parameters whose ±step evaluation flips at least one rectifier.
    pub straddling: usize,
}

/// Relative error with a floor on the denominator so that gradients that
/// are both essentially zero compare as equal.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central differences of the naive loss with rectifier patterns frozen
/// at the unperturbed point, compared against the library's reverse sweep
/// for every parameter.
pub fn gradient_check(
    net: &StegoNet<f64>,
    cover: &PlanarTensor<f64>,
    secret: &PlanarTensor<f64>,
    w: &LossWeights,
    step: f64,
    tolerance: f64,
    floor: f64,
) -> GradCheck {
    let analytic = library_gradient(net, cover, secret, w, 1.0);
    let mut reference = Masks::default();
    naive_loss(net, cover, secret, w, &mut reference);
    let patterns = reference.seen;

    let mut probe = net.clone();
    let base: Vec<f64> = net.params().copied().collect();
    let mut report = GradCheck {
        params: base.len(),
        ..GradCheck::default()
    };
    for (i, &theta) in base.iter().enumerate() {
        let mut eval = |v: f64| {
            set_param(&mut probe, i, v);
            let mut m = Masks::frozen(&patterns);
            let l = naive_loss(&probe, cover, secret, w, &mut m);
            (l, m.flipped)
        };
        let (plus, flip_p) = eval(theta + step);
        let (minus, flip_m) = eval(theta - step);
        set_param(&mut probe, i, theta);
        if flip_p || flip_m {
            report.straddling += 1;
        }
        let numeric = (plus - minus) / (2.0 * step);
        let err = relative_error(analytic[i], numeric, floor);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
        if err > tolerance {
            report.failures += 1;
        }
    }
    report
}

/// Naive Pearson correlation, two passes.
pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..x.len() {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    num / (dx * dy).sqrt()
}

pub mod overfit {
    use std::time::{Duration, Instant};

    use audiostego::audio::fit_to_capacity;
    use audiostego::metrics::{mse_per_pixel_per_channel, pearson};
    use audiostego::synth::{cover_image, speech_clip};
    use audiostego::training::{Control, Example, LossWeights, Pairing, TrainConfig, TrainLog, Trainer};
    use audiostego::{AudioClip, Method, SecretCodec, StegoNet, StftParams};

    pub struct Protocol {
        pub method: Method,
        pub weights: LossWeights,
        pub pairs: usize,
        pub feature_maps: usize,
        pub batch_size: usize,
        pub max_steps: usize,
        pub time_budget: Duration,
        /// Steps between full-set evaluations; 0 evaluates only at the end.
        pub check_every: usize,
        pub seed: u64,
    }

    #[derive(Debug, Clone, Copy, Default)]
    pub struct SetMetrics {
        pub mean_r: f64,
        pub mean_image_mse: f64,
        pub max_image_mse: f64,
        /// Pairs whose revealed clip is constant; they count as r = 0.
        pub undefined_r: usize,
    }

    #[derive(Debug)]
    pub struct Outcome {
        pub steps: usize,
        pub elapsed: Duration,
        pub initial_loss: f64,
        pub final_loss: f64,
        pub metrics: SetMetrics,
        pub history: Vec<(usize, SetMetrics)>,
    }

    pub struct Data {
        pub examples: Vec<Example>,
        pub clips: Vec<AudioClip>,
        pub codec: SecretCodec,
    }

    pub fn data(method: Method, pairs: usize) -> Data {
        let codec = SecretCodec::new(method, StftParams::default(), 16_000).unwrap();
        let clips: Vec<AudioClip> = (0..pairs as u64)
            .map(|i| fit_to_capacity(&speech_clip(1000 + i, codec.capacity_samples(), 16_000), codec.capacity_samples()))
            .collect();
        let examples = clips
            .iter()
            .enumerate()
            .map(|(i, c)| Example {
                cover: cover_image(i as u64),
                secret: codec.encode(c).unwrap(),
            })
            .collect();
        Data { examples, clips, codec }
    }

    /// Mean waveform correlation and image MSE over the set, float path.
    pub fn measure(net: &StegoNet<f32>, data: &Data) -> SetMetrics {
        let mut m = SetMetrics::default();
        for (ex, clip) in data.examples.iter().zip(&data.clips) {
            let container = net.encode(&ex.cover, &ex.secret).unwrap();
            let revealed = data.codec.decode(&net.reveal_forward(&container).unwrap()).unwrap();
            match pearson(&clip.as_f64(), &revealed.as_f64()) {
                Ok(r) => m.mean_r += r,
                Err(_) => m.undefined_r += 1,
            }
            let mse = mse_per_pixel_per_channel(&ex.cover, &container).unwrap();
            m.mean_image_mse += mse;
            m.max_image_mse = m.max_image_mse.max(mse);
        }
        let n = data.examples.len() as f64;
        m.mean_r /= n;
        m.mean_image_mse /= n;
        m
    }

    /// Trains on fixed pairs until `goal` holds at a check, the step limit,
    /// or the time budget.
    pub fn run(p: &Protocol, goal: impl Fn(&SetMetrics) -> bool) -> Outcome {
        let data = data(p.method, p.pairs);
        let cfg = TrainConfig {
            method: p.method,
            loss_weights: p.weights,
            feature_maps: p.feature_maps,
            batch_size: p.batch_size,
            epochs: usize::MAX,
            max_steps: Some(p.max_steps),
            pairing: Pairing::Fixed,
            seed: p.seed,
            ..TrainConfig::default()
        };
        let mut trainer = Trainer::new(cfg).unwrap();
        let start = Instant::now();
        let mut history = Vec::new();
        let mut log = TrainLog::new();
        trainer
            .fit(&data.examples, &[], &mut log, |s, net| {
                if p.check_every > 0 && s.step % p.check_every == 0 {
                    let m = measure(net, &data);
                    history.push((s.step, m));
                    if goal(&m) {
                        return Control::Stop;
                    }
                }
                if start.elapsed() >= p.time_budget {
                    Control::Stop
                } else {
                    Control::Continue
                }
            })
            .unwrap();
        let losses = log.train_losses();
        let metrics = match history.last() {
            Some(&(step, m)) if step == trainer.steps_taken() => m,
            _ => measure(trainer.net(), &data),
        };
        Outcome {
            steps: trainer.steps_taken(),
            elapsed: start.elapsed(),
            initial_loss: losses[0],
            final_loss: *losses.last().unwrap(),
            metrics,
            history,
        }
    }
}
