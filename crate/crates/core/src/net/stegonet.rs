use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::base::{BaseModel, NetworkConfig, OutputActivation, Trace};
use crate::error::{Result, StegoError};
use crate::tensor::{PlanarTensor, Real};

/// Configuration of all three networks; doubles as the fingerprint stored
/// in weight files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Architecture {
    pub prepare: NetworkConfig,
    pub hide: NetworkConfig,
    pub reveal: NetworkConfig,
}

impl Architecture {
    /// Standard wiring for a secret tensor with `secret_channels` channels
    /// and a three-channel cover.
    pub fn for_secret(secret_channels: usize, feature_maps: usize) -> Self {
        Self {
            prepare: NetworkConfig::new(secret_channels, feature_maps, OutputActivation::Relu)
                .with_feature_maps(feature_maps),
            hide: NetworkConfig::new(3 + feature_maps, 3, OutputActivation::Logistic)
                .with_feature_maps(feature_maps),
            reveal: NetworkConfig::new(3, secret_channels, OutputActivation::Linear)
                .with_feature_maps(feature_maps),
        }
    }

    pub fn secret_channels(&self) -> usize {
        self.prepare.input_channels
    }

    pub fn validate(&self) -> Result<()> {
        self.prepare.validate()?;
        self.hide.validate()?;
        self.reveal.validate()?;
        if self.hide.input_channels != 3 + self.prepare.output_channels {
            return Err(StegoError::ArchitectureMismatch(format!(
                "hiding network takes {} channels, expected 3 + {}",
                self.hide.input_channels, self.prepare.output_channels
            )));
        }
        if self.hide.output_channels != 3 || self.reveal.input_channels != 3 {
            return Err(StegoError::ArchitectureMismatch(
                "container must have three channels".into(),
            ));
        }
        if self.reveal.output_channels != self.prepare.input_channels {
            return Err(StegoError::ArchitectureMismatch(
                "reveal output channels must match the secret channels".into(),
            ));
        }
        Ok(())
    }
}

/// Prepare, hiding and reveal networks with all their parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct StegoNet<T = f32> {
    pub prepare: BaseModel<T>,
    pub hide: BaseModel<T>,
    pub reveal: BaseModel<T>,
}

/// Output of a full cover + secret pass.
#[derive(Clone, Debug)]
pub struct StegoOutputs<T> {
    pub container: PlanarTensor<T>,
    pub revealed: PlanarTensor<T>,
}

/// Activations recorded by [`StegoNet::forward_recorded`].
#[derive(Debug, Default)]
pub struct Tape<T> {
    recorded: Option<Recorded<T>>,
}

#[derive(Debug)]
struct Recorded<T> {
    height: usize,
    width: usize,
    prepare: Trace<T>,
    hide: Trace<T>,
    reveal: Trace<T>,
}

impl<T> Tape<T> {
    pub fn new() -> Self {
        Self { recorded: None }
    }

    pub fn is_recorded(&self) -> bool {
        self.recorded.is_some()
    }

    pub fn clear(&mut self) {
        self.recorded = None;
    }
}

impl<T: Real> StegoNet<T> {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            prepare: BaseModel::zeros(arch.prepare)?,
            hide: BaseModel::zeros(arch.hide)?,
            reveal: BaseModel::zeros(arch.reveal)?,
        })
    }

    /// Fan-in uniform initialization from a fixed seed.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            prepare: BaseModel::init_uniform(arch.prepare, &mut rng)?,
            hide: BaseModel::init_uniform(arch.hide, &mut rng)?,
            reveal: BaseModel::init_uniform(arch.reveal, &mut rng)?,
        })
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            prepare: *self.prepare.config(),
            hide: *self.hide.config(),
            reveal: *self.reveal.config(),
        }
    }

    pub fn networks(&self) -> [&BaseModel<T>; 3] {
        [&self.prepare, &self.hide, &self.reveal]
    }

    pub fn networks_mut(&mut self) -> [&mut BaseModel<T>; 3] {
        [&mut self.prepare, &mut self.hide, &mut self.reveal]
    }

    pub fn param_count(&self) -> usize {
        self.networks().iter().map(|n| n.param_count()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.prepare
            .params()
            .chain(self.hide.params())
            .chain(self.reveal.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.prepare
            .params_mut()
            .chain(self.hide.params_mut())
            .chain(self.reveal.params_mut())
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> StegoNet<U> {
        StegoNet {
            prepare: self.prepare.cast(),
            hide: self.hide.cast(),
            reveal: self.reveal.cast(),
        }
    }

    /// Audio features from the secret tensor.
    pub fn prepare_forward(&self, secret: &PlanarTensor<T>) -> Result<PlanarTensor<T>> {
        self.prepare.forward(secret)
    }

    /// Container image from a cover and prepared features; values lie in (0, 1).
    pub fn hide_forward(
        &self,
        cover: &PlanarTensor<T>,
        features: &PlanarTensor<T>,
    ) -> Result<PlanarTensor<T>> {
        if cover.channels() != 3 {
            return Err(StegoError::shape("HxWx3 cover", cover.shape_string()));
        }
        let joined = PlanarTensor::concat_channels(&[cover, features])?;
        self.hide.forward(&joined)
    }

    /// Secret tensor recovered from a container.
    pub fn reveal_forward(&self, container: &PlanarTensor<T>) -> Result<PlanarTensor<T>> {
        if container.channels() != 3 {
            return Err(StegoError::shape("HxWx3 container", container.shape_string()));
        }
        self.reveal.forward(container)
    }

    /// Container for a cover/secret pair.
    pub fn encode(&self, cover: &PlanarTensor<T>, secret: &PlanarTensor<T>) -> Result<PlanarTensor<T>> {
        self.check_pair(cover, secret)?;
        let features = self.prepare_forward(secret)?;
        self.hide_forward(cover, &features)
    }

    fn check_pair(&self, cover: &PlanarTensor<T>, secret: &PlanarTensor<T>) -> Result<()> {
        if cover.channels() != 3 {
            return Err(StegoError::shape("HxWx3 cover", cover.shape_string()));
        }
        if (cover.height(), cover.width()) != (secret.height(), secret.width()) {
            return Err(StegoError::shape(
                format!("{}x{}xC secret", cover.height(), cover.width()),
                secret.shape_string(),
            ));
        }
        if secret.channels() != self.prepare.config().input_channels {
            return Err(StegoError::ChannelMismatch {
                expected: self.prepare.config().input_channels,
                found: secret.channels(),
            });
        }
        Ok(())
    }

    /// Full pass, recording what the reverse sweep needs into `tape`.
    pub fn forward_recorded(
        &self,
        cover: &PlanarTensor<T>,
        secret: &PlanarTensor<T>,
        tape: &mut Tape<T>,
    ) -> Result<StegoOutputs<T>> {
        self.check_pair(cover, secret)?;
        let (h, w, _) = cover.shape();
        let (features, prepare) = self.prepare.run(secret.to_planes(), h, w, true);
        let mut hide_in = cover.to_planes();
        hide_in.extend_from_slice(&features);
        let (container, hide) = self.hide.run(hide_in, h, w, true);
        let (revealed, reveal) = self.reveal.run(container.clone(), h, w, true);
        tape.recorded = Some(Recorded {
            height: h,
            width: w,
            prepare: prepare.expect("recorded"),
            hide: hide.expect("recorded"),
            reveal: reveal.expect("recorded"),
        });
        Ok(StegoOutputs {
            container: PlanarTensor::from_planes(h, w, 3, &container),
            revealed: PlanarTensor::from_planes(h, w, self.reveal.config().output_channels, &revealed),
        })
    }

    /// Reverse-mode gradients of a scalar loss given its gradients with
    /// respect to the container and the revealed secret. Gradients are
    /// added into `grads`, so a batch accumulates by repeated calls.
    pub fn backward(
        &self,
        tape: &Tape<T>,
        d_container: &PlanarTensor<T>,
        d_revealed: &PlanarTensor<T>,
        grads: &mut StegoNet<T>,
    ) -> Result<()> {
        let rec = tape.recorded.as_ref().ok_or(StegoError::NoForwardPass)?;
        let (h, w) = (rec.height, rec.width);
        d_container.ensure_shape(h, w, 3)?;
        d_revealed.ensure_shape(h, w, self.reveal.config().output_channels)?;
        if grads.architecture() != self.architecture() {
            return Err(StegoError::ArchitectureMismatch(
                "gradient buffer does not match the model".into(),
            ));
        }

        let mut d_h = self
            .reveal
            .backward_planes(&rec.reveal, &d_revealed.to_planes(), &mut grads.reveal, true)
            .expect("input gradient requested");
        for (a, b) in d_h.iter_mut().zip(d_container.to_planes()) {
            *a += b;
        }
        let d_hide_in = self
            .hide
            .backward_planes(&rec.hide, &d_h, &mut grads.hide, true)
            .expect("input gradient requested");
        let d_features = &d_hide_in[3 * h * w..];
        self.prepare
            .backward_planes(&rec.prepare, d_features, &mut grads.prepare, false);
        Ok(())
    }
}
