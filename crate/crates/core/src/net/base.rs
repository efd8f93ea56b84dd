//! The shared base model: three parallel stacks of five convolutions
//! (kernels 3, 4 and 5), a shallower second stage of one convolution per
//! kernel size, and a final projection convolution.

use std::fmt;

use rand::Rng;

use super::conv::Conv2d;
use crate::error::{Result, StegoError};
use crate::tensor::{PlanarTensor, Real};

pub const KERNEL_SIZES: [usize; 3] = [3, 4, 5];
pub const BRANCH_DEPTH: usize = 5;

const STAGE2_OFFSET: usize = KERNEL_SIZES.len() * BRANCH_DEPTH;
const FINAL_INDEX: usize = STAGE2_OFFSET + KERNEL_SIZES.len();
const LAYER_COUNT: usize = FINAL_INDEX + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputActivation {
    Relu,
    /// Logistic squashing clamped to `[eps, 1 - eps]`, so outputs stay
    /// strictly inside (0, 1) even where the logistic saturates.
    Logistic,
    Linear,
}

impl OutputActivation {
    pub fn code(self) -> u8 {
        match self {
            OutputActivation::Relu => 0,
            OutputActivation::Logistic => 1,
            OutputActivation::Linear => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(OutputActivation::Relu),
            1 => Some(OutputActivation::Logistic),
            2 => Some(OutputActivation::Linear),
            _ => None,
        }
    }

    fn apply<T: Real>(self, v: &mut [T]) {
        match self {
            OutputActivation::Relu => relu(v),
            OutputActivation::Linear => {}
            OutputActivation::Logistic => {
                let eps = T::epsilon();
                let hi = T::one() - eps;
                for x in v.iter_mut() {
                    let y = T::one() / (T::one() + (-*x).exp());
                    *x = y.max(eps).min(hi);
                }
            }
        }
    }

    /// Multiplies `grad` by the activation derivative, given the outputs.
    fn chain<T: Real>(self, out: &[T], grad: &mut [T]) {
        match self {
            OutputActivation::Relu => relu_chain(out, grad),
            OutputActivation::Linear => {}
            OutputActivation::Logistic => {
                for (g, &y) in grad.iter_mut().zip(out) {
                    *g *= y * (T::one() - y);
                }
            }
        }
    }
}

impl fmt::Display for OutputActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputActivation::Relu => "relu",
            OutputActivation::Logistic => "logistic",
            OutputActivation::Linear => "linear",
        })
    }
}

fn relu<T: Real>(v: &mut [T]) {
    for x in v.iter_mut() {
        *x = x.max(T::zero());
    }
}

fn relu_chain<T: Real>(out: &[T], grad: &mut [T]) {
    for (g, &y) in grad.iter_mut().zip(out) {
        if y <= T::zero() {
            *g = T::zero();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NetworkConfig {
    pub input_channels: usize,
    pub output_channels: usize,
    /// Channels produced by every hidden convolution, per branch.
    pub feature_maps: usize,
    pub final_kernel: usize,
    pub output_activation: OutputActivation,
}

impl NetworkConfig {
    pub const DEFAULT_FEATURE_MAPS: usize = 32;
    pub const DEFAULT_FINAL_KERNEL: usize = 3;

    pub fn new(
        input_channels: usize,
        output_channels: usize,
        output_activation: OutputActivation,
    ) -> Self {
        Self {
            input_channels,
            output_channels,
            feature_maps: Self::DEFAULT_FEATURE_MAPS,
            final_kernel: Self::DEFAULT_FINAL_KERNEL,
            output_activation,
        }
    }

    pub fn with_feature_maps(mut self, feature_maps: usize) -> Self {
        self.feature_maps = feature_maps;
        self
    }

    pub fn kernel_sizes(&self) -> [usize; 3] {
        KERNEL_SIZES
    }

    pub fn branch_depth(&self) -> usize {
        BRANCH_DEPTH
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.output_channels == 0 {
            return Err(StegoError::InvalidParams("channel counts must be positive".into()));
        }
        if self.feature_maps == 0 {
            return Err(StegoError::InvalidParams("feature_maps must be at least 1".into()));
        }
        if self.final_kernel == 0 {
            return Err(StegoError::InvalidParams("final_kernel must be at least 1".into()));
        }
        Ok(())
    }

    /// Layer shapes `(in, out, kernel)` in storage order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, usize)> {
        let f = self.feature_maps;
        let mut shapes = Vec::with_capacity(LAYER_COUNT);
        for &k in &KERNEL_SIZES {
            shapes.push((self.input_channels, f, k));
            for _ in 1..BRANCH_DEPTH {
                shapes.push((f, f, k));
            }
        }
        for &k in &KERNEL_SIZES {
            shapes.push((3 * f, f, k));
        }
        shapes.push((3 * f, self.output_channels, self.final_kernel));
        shapes
    }
}

/// Activations kept from a forward pass for the reverse sweep.
#[derive(Clone, Debug)]
pub(crate) struct Trace<T> {
    height: usize,
    width: usize,
    input: Vec<T>,
    /// Post-activation output of every layer, in storage order.
    outputs: Vec<Vec<T>>,
    stage1: Vec<T>,
    stage2: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseModel<T> {
    config: NetworkConfig,
    layers: Vec<Conv2d<T>>,
}

impl<T: Real> BaseModel<T> {
    /// All weights and biases zero.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(i, o, k)| Conv2d::zeros(i, o, k))
            .collect();
        Ok(Self { config, layers })
    }

    /// Uniform fan-in initialization, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`,
    /// with zero biases.
    pub fn init_uniform<R: Rng>(config: NetworkConfig, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        for layer in &mut model.layers {
            let fan_in = (layer.in_channels * layer.kernel * layer.kernel) as f64;
            let bound = (6.0 / fan_in).sqrt();
            for w in &mut layer.weight {
                *w = T::lit(rng.gen_range(-bound..bound));
            }
        }
        Ok(model)
    }

    pub(crate) fn from_layers(config: NetworkConfig, layers: Vec<Conv2d<T>>) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len()
            || shapes
                .iter()
                .zip(&layers)
                .any(|(&(i, o, k), l)| (l.in_channels, l.out_channels, l.kernel) != (i, o, k))
        {
            return Err(StegoError::ArchitectureMismatch(
                "layer shapes do not match the network configuration".into(),
            ));
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Conv2d<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Conv2d<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Conv2d::param_count).sum()
    }

    /// Visits every parameter, weights before biases, in storage order.
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn cast<U: Real>(&self) -> BaseModel<U> {
        BaseModel {
            config: self.config,
            layers: self
                .layers
                .iter()
                .map(|l| Conv2d {
                    in_channels: l.in_channels,
                    out_channels: l.out_channels,
                    kernel: l.kernel,
                    weight: l.weight.iter().map(|v| U::lit(v.to_f64().unwrap())).collect(),
                    bias: l.bias.iter().map(|v| U::lit(v.to_f64().unwrap())).collect(),
                })
                .collect(),
        }
    }

    /// Forward pass on an H×W×Cin tensor.
    pub fn forward(&self, x: &PlanarTensor<T>) -> Result<PlanarTensor<T>> {
        self.check_input(x)?;
        let (h, w, _) = x.shape();
        let (out, _) = self.run(x.to_planes(), h, w, false);
        Ok(PlanarTensor::from_planes(h, w, self.config.output_channels, &out))
    }

    fn check_input(&self, x: &PlanarTensor<T>) -> Result<()> {
        if x.channels() != self.config.input_channels {
            return Err(StegoError::ChannelMismatch {
                expected: self.config.input_channels,
                found: x.channels(),
            });
        }
        Ok(())
    }

    /// Planar forward pass; returns the output planes and, if `record`,
    /// the activations needed by [`BaseModel::backward_planes`].
    pub(crate) fn run(
        &self,
        input: Vec<T>,
        h: usize,
        w: usize,
        record: bool,
    ) -> (Vec<T>, Option<Trace<T>>) {
        let mut outputs: Vec<Vec<T>> = Vec::with_capacity(if record { LAYER_COUNT } else { 0 });
        let mut stage1 = Vec::with_capacity(3 * self.config.feature_maps * h * w);

        for b in 0..KERNEL_SIZES.len() {
            let mut act: Option<Vec<T>> = None;
            for l in 0..BRANCH_DEPTH {
                let layer = &self.layers[b * BRANCH_DEPTH + l];
                let src = act.as_deref().unwrap_or(&input);
                let mut y = layer.forward(src, h, w);
                relu(&mut y);
                if record {
                    if let Some(prev) = act.take() {
                        outputs.push(prev);
                    }
                }
                act = Some(y);
            }
            let last = act.expect("branch depth is positive");
            stage1.extend_from_slice(&last);
            if record {
                outputs.push(last);
            }
        }

        let mut stage2 = Vec::with_capacity(stage1.len());
        for b in 0..KERNEL_SIZES.len() {
            let mut y = self.layers[STAGE2_OFFSET + b].forward(&stage1, h, w);
            relu(&mut y);
            stage2.extend_from_slice(&y);
            if record {
                outputs.push(y);
            }
        }

        let mut out = self.layers[FINAL_INDEX].forward(&stage2, h, w);
        self.config.output_activation.apply(&mut out);

        let trace = record.then(|| {
            outputs.push(out.clone());
            Trace {
                height: h,
                width: w,
                input,
                outputs,
                stage1,
                stage2,
            }
        });
        (out, trace)
    }

    /// Reverse sweep. Accumulates parameter gradients into `grads` and
    /// returns the input gradient when `want_input` is set.
    pub(crate) fn backward_planes(
        &self,
        trace: &Trace<T>,
        grad_out: &[T],
        grads: &mut BaseModel<T>,
        want_input: bool,
    ) -> Option<Vec<T>> {
        let (h, w) = (trace.height, trace.width);
        let hw = h * w;
        let f = self.config.feature_maps;

        let mut g = grad_out.to_vec();
        self.config
            .output_activation
            .chain(&trace.outputs[FINAL_INDEX], &mut g);
        let d_stage2 = self.layers[FINAL_INDEX]
            .backward(&trace.stage2, &g, h, w, &mut grads.layers[FINAL_INDEX], true)
            .expect("input gradient requested");

        let mut d_stage1 = vec![T::zero(); trace.stage1.len()];
        for b in 0..KERNEL_SIZES.len() {
            let idx = STAGE2_OFFSET + b;
            let mut g = d_stage2[b * f * hw..(b + 1) * f * hw].to_vec();
            relu_chain(&trace.outputs[idx], &mut g);
            let d = self.layers[idx]
                .backward(&trace.stage1, &g, h, w, &mut grads.layers[idx], true)
                .expect("input gradient requested");
            for (a, v) in d_stage1.iter_mut().zip(d) {
                *a += v;
            }
        }

        let mut d_input = want_input.then(|| vec![T::zero(); trace.input.len()]);
        for b in 0..KERNEL_SIZES.len() {
            let mut g = d_stage1[b * f * hw..(b + 1) * f * hw].to_vec();
            for l in (0..BRANCH_DEPTH).rev() {
                let idx = b * BRANCH_DEPTH + l;
                relu_chain(&trace.outputs[idx], &mut g);
                let src = if l == 0 {
                    &trace.input
                } else {
                    &trace.outputs[idx - 1]
                };
                let need = l > 0 || want_input;
                let d = self.layers[idx].backward(src, &g, h, w, &mut grads.layers[idx], need);
                match (l, d) {
                    (0, Some(d)) => {
                        if let Some(acc) = d_input.as_mut() {
                            for (a, v) in acc.iter_mut().zip(d) {
                                *a += v;
                            }
                        }
                    }
                    (_, Some(d)) => g = d,
                    (_, None) => {}
                }
            }
        }
        d_input
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layer_count_and_shapes() {
        let cfg = NetworkConfig::new(3, 32, OutputActivation::Relu);
        let shapes = cfg.layer_shapes();
        assert_eq!(shapes.len(), 19);
        assert_eq!(shapes[0], (3, 32, 3));
        assert_eq!(shapes[5], (3, 32, 4));
        assert_eq!(shapes[14], (32, 32, 5));
        assert_eq!(shapes[15], (96, 32, 3));
        assert_eq!(shapes[18], (96, 32, 3));
    }

    #[test]
    fn spatial_size_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (h, w) in [(1, 1), (5, 7), (8, 8)] {
            let cfg = NetworkConfig::new(2, 3, OutputActivation::Linear).with_feature_maps(2);
            let m = BaseModel::<f32>::init_uniform(cfg, &mut rng).unwrap();
            let x = PlanarTensor::from_fn(h, w, 2, |y, x, c| (y + x + c) as f32 * 0.1);
            assert_eq!(m.forward(&x).unwrap().shape(), (h, w, 3));
        }
    }

    #[test]
    fn zero_weights_give_logistic_half_and_linear_zero() {
        let x = PlanarTensor::<f32>::from_fn(4, 4, 3, |y, x, c| (y * x + c) as f32);
        let m = BaseModel::<f32>::zeros(NetworkConfig::new(3, 3, OutputActivation::Logistic)
            .with_feature_maps(2))
        .unwrap();
        assert!(m.forward(&x).unwrap().values().iter().all(|&v| v == 0.5));
        let m = BaseModel::<f32>::zeros(NetworkConfig::new(3, 2, OutputActivation::Linear)
            .with_feature_maps(2))
        .unwrap();
        assert!(m.forward(&x).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let m = BaseModel::<f32>::zeros(NetworkConfig::new(3, 3, OutputActivation::Linear)
            .with_feature_maps(1))
        .unwrap();
        let x = PlanarTensor::<f32>::zeros(2, 2, 2);
        assert!(matches!(
            m.forward(&x),
            Err(StegoError::ChannelMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn logistic_stays_strictly_inside_unit_interval() {
        let mut v = vec![-1e4f32, -40.0, 0.0, 40.0, 1e4];
        OutputActivation::Logistic.apply(&mut v);
        assert!(v.iter().all(|&y| y > 0.0 && y < 1.0), "{v:?}");
    }

    /// On a 1×1 input every kernel reduces to its centre tap, so the whole
    /// model is a chain of small dense layers we can evaluate by hand.
    #[test]
    fn single_pixel_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = NetworkConfig::new(2, 3, OutputActivation::Logistic).with_feature_maps(3);
        let mut m = BaseModel::<f64>::init_uniform(cfg, &mut rng).unwrap();
        for l in m.layers_mut() {
            for b in &mut l.bias {
                *b = rng.gen_range(-0.2..0.2);
            }
        }
        let x = [0.3, -0.7];

        let dense = |l: &Conv2d<f64>, v: &[f64]| -> Vec<f64> {
            let c = l.kernel / 2;
            (0..l.out_channels)
                .map(|o| {
                    let mut s = l.bias[o];
                    for (i, &vi) in v.iter().enumerate() {
                        s += l.weight[((o * l.in_channels + i) * l.kernel + c) * l.kernel + c] * vi;
                    }
                    s
                })
                .collect()
        };
        let relu_v = |v: Vec<f64>| v.into_iter().map(|a| a.max(0.0)).collect::<Vec<_>>();

        let layers = m.layers();
        let mut s1 = Vec::new();
        for b in 0..3 {
            let mut v = x.to_vec();
            for l in 0..5 {
                v = relu_v(dense(&layers[b * 5 + l], &v));
            }
            s1.extend(v);
        }
        let mut s2 = Vec::new();
        for b in 0..3 {
            s2.extend(relu_v(dense(&layers[15 + b], &s1)));
        }
        let expect: Vec<f64> = dense(&layers[18], &s2)
            .into_iter()
            .map(|z| 1.0 / (1.0 + (-z).exp()))
            .collect();

        let input = PlanarTensor::new(1, 1, 2, x.to_vec()).unwrap();
        let got = m.forward(&input).unwrap();
        for (a, b) in got.values().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }
}
