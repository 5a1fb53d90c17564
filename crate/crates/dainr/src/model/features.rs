//! Frozen convolutional feature extractor.
//!
//! An optional side input for the canonical network: a small, randomly
//! initialized (and never trained) stack of 3×3 convolutions over the
//! zero-filled reconstruction of the frame being rendered. Because the
//! weights are frozen, the output enters the tape as a constant and no
//! gradient flows into the extractor.

use rand_chacha::rand_core::RngCore;

use crate::autodiff::Tensor;
use crate::image::ComplexImage;
use crate::rng;
use crate::{real, Error, Real, Result};

/// One conv layer's weights: `[out_c, in_c, 3, 3]` plus per-channel bias.
#[derive(Clone, Debug)]
struct ConvLayer<T> {
    weight: Vec<T>,
    bias: Vec<T>,
    in_c: usize,
    out_c: usize,
}

impl<T: Real> ConvLayer<T> {
    fn init(in_c: usize, out_c: usize, rng: &mut impl RngCore) -> Self {
        let fan_in = (in_c * 9) as f64;
        let bound = (6.0 / fan_in).sqrt();
        Self {
            weight: (0..out_c * in_c * 9).map(|_| rng::uniform(rng, -bound, bound)).collect(),
            bias: (0..out_c).map(|_| rng::uniform(rng, -1.0 / fan_in.sqrt(), 1.0 / fan_in.sqrt())).collect(),
            in_c,
            out_c,
        }
    }

    /// Zero-padded 3×3 convolution over channels-first planes.
    fn apply(&self, input: &[T], size: usize) -> Vec<T> {
        assert_eq!(input.len(), self.in_c * size * size);
        let mut out = vec![T::zero(); self.out_c * size * size];
        let plane = size * size;
        for o in 0..self.out_c {
            let out_plane = &mut out[o * plane..(o + 1) * plane];
            out_plane.fill(self.bias[o]);
            for i in 0..self.in_c {
                let in_plane = &input[i * plane..(i + 1) * plane];
                let w = &self.weight[(o * self.in_c + i) * 9..(o * self.in_c + i + 1) * 9];
                for y in 0..size {
                    for x in 0..size {
                        let mut acc = T::zero();
                        for dy in 0..3usize {
                            let sy = y as i64 + dy as i64 - 1;
                            if sy < 0 || sy >= size as i64 {
                                continue;
                            }
                            for dx in 0..3usize {
                                let sx = x as i64 + dx as i64 - 1;
                                if sx < 0 || sx >= size as i64 {
                                    continue;
                                }
                                acc += in_plane[sy as usize * size + sx as usize] * w[dy * 3 + dx];
                            }
                        }
                        out_plane[y * size + x] += acc;
                    }
                }
            }
        }
        out
    }
}

/// Frozen feature stack: `input_frames` complex frames in, `channels` feature
/// planes out, ReLU between layers with a linear final layer.
#[derive(Clone, Debug)]
pub struct FeatureExtractor<T> {
    layers: Vec<ConvLayer<T>>,
    input_frames: usize,
    channels: usize,
}

impl<T: Real> FeatureExtractor<T> {
    pub fn new(input_frames: usize, channels: usize, layers: usize, seed: u64) -> Self {
        assert!(input_frames >= 1 && channels >= 1 && layers >= 1);
        let mut r = rng::seeded(seed);
        let mut stack = Vec::with_capacity(layers);
        let mut in_c = 2 * input_frames;
        for _ in 0..layers {
            stack.push(ConvLayer::init(in_c, channels, &mut r));
            in_c = channels;
        }
        Self { layers: stack, input_frames, channels }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn input_frames(&self) -> usize {
        self.input_frames
    }

    /// Flat views of every conv weight and bias, for checkpointing.
    pub fn tensors(&self) -> Vec<(String, Tensor<T>)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((
                format!("extractor.layer{i}.weight"),
                Tensor::from_vec(vec![l.out_c, l.in_c, 3, 3], l.weight.clone()),
            ));
            out.push((format!("extractor.layer{i}.bias"), Tensor::from_vec(vec![l.out_c], l.bias.clone())));
        }
        out
    }

    pub fn load_tensors(&mut self, tensors: &[Tensor<T>]) -> Result<()> {
        if tensors.len() != 2 * self.layers.len() {
            return Err(Error::ShapeMismatch(format!(
                "extractor expects {} tensors, got {}",
                2 * self.layers.len(),
                tensors.len()
            )));
        }
        for (i, l) in self.layers.iter_mut().enumerate() {
            let w = &tensors[2 * i];
            let b = &tensors[2 * i + 1];
            if w.len() != l.weight.len() || b.len() != l.bias.len() {
                return Err(Error::ShapeMismatch(format!("extractor layer {i} shape")));
            }
            l.weight.copy_from_slice(w.data());
            l.bias.copy_from_slice(b.data());
        }
        Ok(())
    }

    /// Features for one render lattice: `[out_size², channels]`, rows in
    /// pixel order. Input frames are split into (re, im) planes, convolved
    /// at their native size, then bilinearly resampled to `out_size`.
    pub fn extract(&self, frames: &[&ComplexImage<T>], out_size: usize) -> Result<Tensor<T>> {
        if frames.len() != self.input_frames {
            return Err(Error::InvalidArgument(format!(
                "extractor built for {} input frame(s), got {}",
                self.input_frames,
                frames.len()
            )));
        }
        let size = frames[0].size();
        if frames.iter().any(|f| f.size() != size) {
            return Err(Error::ShapeMismatch("extractor frames differ in size".into()));
        }

        let mut planes = Vec::with_capacity(2 * frames.len() * size * size);
        for f in frames {
            planes.extend(f.data().iter().map(|z| z.re));
            planes.extend(f.data().iter().map(|z| z.im));
        }

        let mut x = planes;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.apply(&x, size);
            if i != last {
                for v in &mut x {
                    *v = v.max(T::zero());
                }
            }
        }

        let up = bilinear_resize(&x, self.channels, size, out_size);
        // Channels-first planes -> per-pixel rows.
        let plane = out_size * out_size;
        let mut rows = vec![T::zero(); plane * self.channels];
        for c in 0..self.channels {
            for p in 0..plane {
                rows[p * self.channels + c] = up[c * plane + p];
            }
        }
        Ok(Tensor::from_vec(vec![plane, self.channels], rows))
    }
}

/// Align-corners bilinear resampling of channels-first square planes.
fn bilinear_resize<T: Real>(input: &[T], channels: usize, size: usize, out_size: usize) -> Vec<T> {
    if out_size == size {
        return input.to_vec();
    }
    let scale = if out_size > 1 { (size - 1) as f64 / (out_size - 1) as f64 } else { 0.0 };
    let mut out = vec![T::zero(); channels * out_size * out_size];
    for c in 0..channels {
        let src = &input[c * size * size..(c + 1) * size * size];
        let dst = &mut out[c * out_size * out_size..(c + 1) * out_size * out_size];
        for y in 0..out_size {
            let sy = y as f64 * scale;
            let y0 = (sy.floor() as usize).min(size - 1);
            let y1 = (y0 + 1).min(size - 1);
            let fy = real::<T>(sy - y0 as f64);
            for x in 0..out_size {
                let sx = x as f64 * scale;
                let x0 = (sx.floor() as usize).min(size - 1);
                let x1 = (x0 + 1).min(size - 1);
                let fx = real::<T>(sx - x0 as f64);
                let one = T::one();
                dst[y * out_size + x] = src[y0 * size + x0] * (one - fx) * (one - fy)
                    + src[y0 * size + x1] * fx * (one - fy)
                    + src[y1 * size + x0] * (one - fx) * fy
                    + src[y1 * size + x1] * fx * fy;
            }
        }
    }
    out
}
