//! Sinusoidal positional features.

use std::rc::Rc;

use crate::autodiff::{CustomGrad, Tape, Tensor, Var};
use crate::{real, Real};

/// Octave features of a `[p, d]` batch: for band `i` in `0..bands` the output
/// carries `sin(2^i π x)` for every component, then `cos(2^i π x)`, bands in
/// ascending order, giving `[p, 2 d bands]`.
pub fn frequency_features<T: Real>(points: &Tensor<T>, bands: usize) -> Tensor<T> {
    let (p, d) = (points.rows(), points.cols());
    let width = 2 * d * bands;
    let mut out = vec![T::zero(); p * width];
    for (r, row) in points.data().chunks_exact(d).enumerate() {
        for i in 0..bands {
            let freq = band_frequency::<T>(i);
            let base = r * width + i * 2 * d;
            for (j, &x) in row.iter().enumerate() {
                let a = freq * x;
                out[base + j] = a.sin();
                out[base + d + j] = a.cos();
            }
        }
    }
    Tensor::from_vec(vec![p, width], out)
}

/// Differentiable version of [`frequency_features`] recorded on the tape.
pub fn frequency_encode<T: Real>(tape: &mut Tape<T>, points: Var, bands: usize) -> Var {
    let value = frequency_features(tape.value(points), bands);
    tape.custom(&[points], value, Rc::new(FrequencyEncode { bands }))
}

fn band_frequency<T: Real>(band: usize) -> T {
    real::<T>(f64::powi(2.0, band as i32)) * T::PI()
}

struct FrequencyEncode {
    bands: usize,
}

impl<T: Real> CustomGrad<T> for FrequencyEncode {
    fn name(&self) -> &'static str {
        "frequency_encode"
    }

    fn backward(
        &self,
        inputs: &[Tensor<T>],
        grad_out: &Tensor<T>,
        acc: &mut dyn FnMut(usize, Tensor<T>),
    ) {
        let points = &inputs[0];
        let (p, d) = (points.rows(), points.cols());
        let width = 2 * d * self.bands;
        let mut dpoints = vec![T::zero(); p * d];
        for (r, row) in points.data().chunks_exact(d).enumerate() {
            for i in 0..self.bands {
                let freq = band_frequency::<T>(i);
                let base = r * width + i * 2 * d;
                for (j, &x) in row.iter().enumerate() {
                    let a = freq * x;
                    let g_sin = grad_out.data()[base + j];
                    let g_cos = grad_out.data()[base + d + j];
                    dpoints[r * d + j] += freq * (g_sin * a.cos() - g_cos * a.sin());
                }
            }
        }
        acc(0, Tensor::from_vec(vec![p, d], dpoints));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn width_is_two_d_bands() {
        let pts = Tensor::<f64>::zeros(vec![3, 2]);
        assert_eq!(frequency_features(&pts, 10).shape(), &[3, 40]);
    }

    #[test]
    fn known_values_at_half() {
        // x = 0.5: band 0 gives sin(π/2)=1, cos(π/2)=0;
        // band 1 gives sin(π)=0, cos(π)=-1.
        let pts = Tensor::from_vec(vec![1, 1], vec![0.5_f64]);
        let feats = frequency_features(&pts, 2);
        let got = feats.data();
        assert_relative_eq!(got[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(got[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(got[2], 0.0, epsilon = 1e-12);
        assert_relative_eq!(got[3], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn bands_double_in_frequency() {
        let pts = Tensor::from_vec(vec![1, 1], vec![0.3_f64]);
        let feats = frequency_features(&pts, 4);
        for i in 0..4 {
            let f = f64::powi(2.0, i as i32) * std::f64::consts::PI;
            assert_relative_eq!(feats.data()[2 * i], (f * 0.3).sin(), epsilon = 1e-12);
            assert_relative_eq!(feats.data()[2 * i + 1], (f * 0.3).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let bands = 4;
        let pts = vec![0.13_f64, -0.41, 0.72, 0.05, -0.9, 0.31];
        let weights: Vec<f64> = (0..3 * 2 * 2 * bands).map(|k| 0.1 + 0.03 * k as f64).collect();

        let loss_at = |pts_data: &[f64]| -> f64 {
            let feats = frequency_features(&Tensor::from_vec(vec![3, 2], pts_data.to_vec()), bands);
            feats.data().iter().zip(&weights).map(|(&f, &w)| f * w).sum()
        };

        let mut tape = Tape::<f64>::new();
        let p = tape.param(Tensor::from_vec(vec![3, 2], pts.clone()));
        let enc = frequency_encode(&mut tape, p, bands);
        let w = tape.constant(Tensor::from_vec(vec![3, 2 * 2 * bands], weights.clone()));
        let weighted = tape.mul(enc, w);
        let loss = tape.sum(weighted);
        let grads = tape.backward(loss).unwrap();
        let analytic = grads.get(p).unwrap();

        let h = 1e-6;
        for k in 0..pts.len() {
            let mut plus = pts.clone();
            let mut minus = pts.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            assert_relative_eq!(analytic.data()[k], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }
}
