//! Same-padded 2-D convolution on channel-planar buffers.
//!
//! Buffers are `channels` consecutive `height * width` planes. Kernels are
//! stored `[out][in][ky][kx]`. For a kernel of size `k` the input is padded
//! with `k / 2` zeros on the top/left and `k - 1 - k / 2` on the
//! bottom/right, so a 4×4 kernel pads 2 before and 1 after.

use crate::tensor::Real;

const LANES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Conv2d<T> {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            weight: vec![T::zero(); out_channels * in_channels * kernel * kernel],
            bias: vec![T::zero(); out_channels],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Leading and trailing zero padding along each spatial axis.
    pub fn pads(&self) -> (usize, usize) {
        let lo = self.kernel / 2;
        (lo, self.kernel - 1 - lo)
    }

    fn padded_input(&self, input: &[T], h: usize, w: usize) -> Vec<T> {
        let (lo, _) = self.pads();
        let k = self.kernel;
        let (ph, pw) = (h + k - 1, w + k - 1);
        let mut out = vec![T::zero(); self.in_channels * ph * pw];
        for c in 0..self.in_channels {
            for y in 0..h {
                let src = &input[(c * h + y) * w..][..w];
                let dst = &mut out[(c * ph + y + lo) * pw + lo..][..w];
                dst.copy_from_slice(src);
            }
        }
        out
    }

    /// Pre-activation output for one example.
    pub fn forward(&self, input: &[T], h: usize, w: usize) -> Vec<T> {
        debug_assert_eq!(input.len(), self.in_channels * h * w);
        let k = self.kernel;
        let (ph, pw) = (h + k - 1, w + k - 1);
        let padded = self.padded_input(input, h, w);
        let cin = self.in_channels;
        let mut out = vec![T::zero(); self.out_channels * h * w];
        let mut acc = vec![T::zero(); BLOCK * w];
        let mut taps = vec![T::zero(); BLOCK * k];
        for oc0 in (0..self.out_channels).step_by(BLOCK) {
            let ob = BLOCK.min(self.out_channels - oc0);
            for y in 0..h {
                for o in 0..ob {
                    acc[o * w..(o + 1) * w].fill(self.bias[oc0 + o]);
                }
                for ic in 0..cin {
                    for ky in 0..k {
                        for o in 0..ob {
                            let base = (((oc0 + o) * cin + ic) * k + ky) * k;
                            taps[o * k..(o + 1) * k].copy_from_slice(&self.weight[base..base + k]);
                        }
                        let src = &padded[(ic * ph + y + ky) * pw..][..pw];
                        correlate_block(&mut acc[..ob * w], src, &taps[..ob * k], k);
                    }
                }
                for o in 0..ob {
                    out[((oc0 + o) * h + y) * w..][..w].copy_from_slice(&acc[o * w..(o + 1) * w]);
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients into `grad` and, when requested,
    /// returns the gradient with respect to `input`.
    pub fn backward(
        &self,
        input: &[T],
        grad_pre: &[T],
        h: usize,
        w: usize,
        grad: &mut Conv2d<T>,
        want_input: bool,
    ) -> Option<Vec<T>> {
        let k = self.kernel;
        let (lo, _) = self.pads();
        let (ph, pw) = (h + k - 1, w + k - 1);
        let padded = self.padded_input(input, h, w);
        let cin = self.in_channels;
        let hw = h * w;

        for (oc, g) in grad_pre.chunks_exact(hw).enumerate() {
            grad.bias[oc] += g.iter().copied().sum::<T>();
        }
        let mut acc = vec![[T::zero(); LANES]; BLOCK * k];
        for oc0 in (0..self.out_channels).step_by(BLOCK) {
            let ob = BLOCK.min(self.out_channels - oc0);
            for ic in 0..cin {
                for ky in 0..k {
                    acc.iter_mut().for_each(|a| *a = [T::zero(); LANES]);
                    for y in 0..h {
                        let src = &padded[(ic * ph + y + ky) * pw..][..pw];
                        let g = &grad_pre[oc0 * hw..(oc0 + ob) * hw];
                        dots_block(g, hw, y * w, w, src, &mut acc[..ob * k], k);
                    }
                    for o in 0..ob {
                        let base = (((oc0 + o) * cin + ic) * k + ky) * k;
                        for kx in 0..k {
                            grad.weight[base + kx] += acc[o * k + kx].iter().copied().sum::<T>();
                        }
                    }
                }
            }
        }

        if !want_input {
            return None;
        }

        // Full correlation of the gradient with the flipped kernel; the
        // input channels play the role of outputs here.
        let gw = w + 2 * (k - 1);
        let mut gpad = vec![T::zero(); self.out_channels * h * gw];
        for oc in 0..self.out_channels {
            for y in 0..h {
                let src = &grad_pre[(oc * h + y) * w..][..w];
                gpad[(oc * h + y) * gw + k - 1..][..w].copy_from_slice(src);
            }
        }
        let mut dinput = vec![T::zero(); cin * hw];
        let mut acc = vec![T::zero(); BLOCK * pw];
        let mut taps = vec![T::zero(); BLOCK * k];
        for ic0 in (0..cin).step_by(BLOCK) {
            let ib = BLOCK.min(cin - ic0);
            // Padded row r of d_input receives contributions from output
            // rows y = r - ky.
            for r in lo..lo + h {
                acc[..ib * pw].fill(T::zero());
                for oc in 0..self.out_channels {
                    for ky in 0..k {
                        if r < ky || r - ky >= h {
                            continue;
                        }
                        let y = r - ky;
                        for i in 0..ib {
                            let base = ((oc * cin + ic0 + i) * k + ky) * k;
                            for j in 0..k {
                                taps[i * k + j] = self.weight[base + k - 1 - j];
                            }
                        }
                        let src = &gpad[(oc * h + y) * gw..][..gw];
                        correlate_block(&mut acc[..ib * pw], src, &taps[..ib * k], k);
                    }
                }
                for i in 0..ib {
                    let row = &acc[i * pw + lo..i * pw + lo + w];
                    dinput[((ic0 + i) * h + r - lo) * w..][..w].copy_from_slice(row);
                }
            }
        }
        Some(dinput)
    }
}

/// Output channels computed together so each source load feeds several
/// accumulators.
const BLOCK: usize = 4;

/// For each block row `o`: `acc[o][x] += sum_j taps[o][j] * src[x + j]`.
#[inline]
fn correlate_block<T: Real>(acc: &mut [T], src: &[T], taps: &[T], k: usize) {
    let ob = taps.len() / k;
    macro_rules! go {
        ($($kk:literal),*) => {
            match (k, ob) {
                $(
                    ($kk, 1) => correlate_fixed::<T, $kk, 1>(acc, src, taps),
                    ($kk, 2) => correlate_fixed::<T, $kk, 2>(acc, src, taps),
                    ($kk, 3) => correlate_fixed::<T, $kk, 3>(acc, src, taps),
                    ($kk, 4) => correlate_fixed::<T, $kk, 4>(acc, src, taps),
                )*
                _ => {
                    let n = acc.len() / ob;
                    for o in 0..ob {
                        for j in 0..k {
                            let t = taps[o * k + j];
                            for (a, &s) in acc[o * n..(o + 1) * n].iter_mut().zip(&src[j..]) {
                                *a = t.mul_add(s, *a);
                            }
                        }
                    }
                }
            }
        };
    }
    go!(1, 2, 3, 4, 5, 6, 7)
}

#[inline(always)]
fn correlate_fixed<T: Real, const K: usize, const OB: usize>(acc: &mut [T], src: &[T], taps: &[T]) {
    let n = acc.len() / OB;
    let taps: [[T; K]; OB] = std::array::from_fn(|o| std::array::from_fn(|j| taps[o * K + j]));
    let rows: [&[T]; K] = std::array::from_fn(|j| &src[j..j + n]);
    let mut chunks = acc.chunks_exact_mut(n);
    let outs: [&mut [T]; OB] = std::array::from_fn(|_| chunks.next().unwrap());
    for x in 0..n {
        let s: [T; K] = std::array::from_fn(|j| rows[j][x]);
        for o in 0..OB {
            let mut a = outs[o][x];
            for j in 0..K {
                a = taps[o][j].mul_add(s[j], a);
            }
            outs[o][x] = a;
        }
    }
}

/// For each block channel `o` and tap `j`:
/// `acc[o * k + j] += sum_x g[o][row_off + x] * src[x + j]`, lane-split.
#[inline]
fn dots_block<T: Real>(
    g: &[T],
    plane: usize,
    row_off: usize,
    n: usize,
    src: &[T],
    acc: &mut [[T; LANES]],
    k: usize,
) {
    let ob = acc.len() / k;
    macro_rules! go {
        ($($kk:literal),*) => {
            match (k, ob) {
                $(
                    ($kk, 1) => dots_fixed::<T, $kk, 1>(g, plane, row_off, n, src, acc),
                    ($kk, 2) => dots_fixed::<T, $kk, 2>(g, plane, row_off, n, src, acc),
                    ($kk, 3) => dots_fixed::<T, $kk, 3>(g, plane, row_off, n, src, acc),
                    ($kk, 4) => dots_fixed::<T, $kk, 4>(g, plane, row_off, n, src, acc),
                )*
                _ => {
                    for o in 0..ob {
                        let gr = &g[o * plane + row_off..][..n];
                        for j in 0..k {
                            for (&a, &b) in gr.iter().zip(&src[j..]) {
                                acc[o * k + j][0] = a.mul_add(b, acc[o * k + j][0]);
                            }
                        }
                    }
                }
            }
        };
    }
    go!(1, 2, 3, 4, 5, 6, 7)
}

#[inline(always)]
fn dots_fixed<T: Real, const K: usize, const OB: usize>(
    g: &[T],
    plane: usize,
    row_off: usize,
    n: usize,
    src: &[T],
    acc: &mut [[T; LANES]],
) {
    let whole = n / LANES * LANES;
    let rows: [&[T]; K] = std::array::from_fn(|j| &src[j..j + n]);
    for o in 0..OB {
        let gr = &g[o * plane + row_off..][..n];
        let mut local: [[T; LANES]; K] = std::array::from_fn(|j| acc[o * K + j]);
        for base in (0..whole).step_by(LANES) {
            let gc: &[T; LANES] = gr[base..base + LANES].try_into().unwrap();
            for j in 0..K {
                let sc: &[T; LANES] = rows[j][base..base + LANES].try_into().unwrap();
                for l in 0..LANES {
                    local[j][l] = gc[l].mul_add(sc[l], local[j][l]);
                }
            }
        }
        for x in whole..n {
            for j in 0..K {
                local[j][0] = gr[x].mul_add(rows[j][x], local[j][0]);
            }
        }
        for j in 0..K {
            acc[o * K + j] = local[j];
        }
    }
}
