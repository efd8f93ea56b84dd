//! Rank-3 real tensors stored row-major by (row, column, channel).

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Result, StegoError};

/// Scalar type the networks and tensors are generic over (`f32` for
/// training, `f64` for gradient checking).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Height × width × channels array; images, packed audio, spectrograms and
/// feature maps all live here.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarTensor<T = f32> {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<T>,
}

impl<T: Real> PlanarTensor<T> {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        if height * width * channels != values.len() {
            return Err(StegoError::shape(
                format!("{} values for {height}x{width}x{channels}", height * width * channels),
                format!("{} values", values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(StegoError::InvalidParams(format!(
                "tensor value at flat index {i} is not finite"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, T::zero())
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Self {
        Self {
            height,
            width,
            channels,
            values: vec![value; height * width * channels],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut values = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    values.push(f(y, x, c));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        self.values[self.index(y, x, c)]
    }

    pub fn set(&mut self, y: usize, x: usize, c: usize, v: T) {
        let i = self.index(y, x, c);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> PlanarTensor<U> {
        PlanarTensor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self
                .values
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap_or(0.0)).unwrap_or_else(U::zero))
                .collect(),
        }
    }

    pub fn ensure_shape(&self, height: usize, width: usize, channels: usize) -> Result<()> {
        if self.shape() != (height, width, channels) {
            return Err(StegoError::shape(
                format!("{height}x{width}x{channels}"),
                self.shape_string(),
            ));
        }
        Ok(())
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    /// Stacks tensors of equal spatial size along the channel axis.
    pub fn concat_channels(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or(StegoError::EmptyInput("concat"))?;
        let (h, w) = (first.height, first.width);
        for p in parts {
            if p.height != h || p.width != w {
                return Err(StegoError::shape(format!("{h}x{w}xC"), p.shape_string()));
            }
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut values = Vec::with_capacity(h * w * channels);
        for px in 0..h * w {
            for p in parts {
                values.extend_from_slice(&p.values[px * p.channels..(px + 1) * p.channels]);
            }
        }
        Ok(Self {
            height: h,
            width: w,
            channels,
            values,
        })
    }

    /// Channel-planar copy: `channels` consecutive `height * width` planes.
    pub fn to_planes(&self) -> Vec<T> {
        let hw = self.height * self.width;
        let mut out = vec![T::zero(); self.values.len()];
        for px in 0..hw {
            for c in 0..self.channels {
                out[c * hw + px] = self.values[px * self.channels + c];
            }
        }
        out
    }

    pub fn from_planes(height: usize, width: usize, channels: usize, planes: &[T]) -> Self {
        let hw = height * width;
        assert_eq!(planes.len(), hw * channels, "plane buffer size");
        let mut values = vec![T::zero(); planes.len()];
        for c in 0..channels {
            for px in 0..hw {
                values[px * channels + c] = planes[c * hw + px];
            }
        }
        Self {
            height,
            width,
            channels,
            values,
        }
    }
}
