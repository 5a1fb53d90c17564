//! Structural similarity over normalized magnitude frames.
//!
//! The classic single-scale formulation: an 11×11 Gaussian window (σ = 1.5)
//! slides over every fully-contained position, local means/variances feed
//! the usual stabilized ratio with K₁ = 0.01, K₂ = 0.03 at dynamic range 1,
//! and the frame score is the mean over window positions. No padding — a
//! frame smaller than the window is rejected rather than silently averaged
//! over nothing.

use crate::{real, Error, Real, Result};

pub const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// The normalized 11×11 Gaussian window, flattened row-major.
fn gaussian_window<T: Real>() -> Vec<T> {
    let half = (WINDOW / 2) as f64;
    let axis: Vec<f64> = (0..WINDOW)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * SIGMA * SIGMA)).exp())
        .collect();
    let mut w: Vec<f64> = Vec::with_capacity(WINDOW * WINDOW);
    for y in &axis {
        for x in &axis {
            w.push(x * y);
        }
    }
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| real(v / total)).collect()
}

/// Mean local SSIM between two `size × size` frames in `[0, 1]`.
pub fn ssim<T: Real>(reference: &[T], test: &[T], size: usize) -> Result<T> {
    if reference.len() != size * size || test.len() != size * size {
        return Err(Error::ShapeMismatch(format!(
            "frames of {} and {} pixels against a {size}x{size} grid",
            reference.len(),
            test.len()
        )));
    }
    if size < WINDOW {
        return Err(Error::InvalidArgument(format!(
            "{size}x{size} frame is smaller than the {WINDOW}x{WINDOW} window"
        )));
    }
    let window = gaussian_window::<T>();
    let c1 = real::<T>(K1 * K1);
    let c2 = real::<T>(K2 * K2);
    let two = real::<T>(2.0);

    let positions = size - WINDOW + 1;
    let mut acc = T::zero();
    for wy in 0..positions {
        for wx in 0..positions {
            let (mut ma, mut mb) = (T::zero(), T::zero());
            let (mut aa, mut bb, mut ab) = (T::zero(), T::zero(), T::zero());
            for ky in 0..WINDOW {
                let row = (wy + ky) * size + wx;
                let wrow = &window[ky * WINDOW..(ky + 1) * WINDOW];
                for (kx, &w) in wrow.iter().enumerate() {
                    let a = reference[row + kx];
                    let b = test[row + kx];
                    ma += w * a;
                    mb += w * b;
                    aa += w * a * a;
                    bb += w * b * b;
                    ab += w * a * b;
                }
            }
            let va = aa - ma * ma;
            let vb = bb - mb * mb;
            let cov = ab - ma * mb;
            let num = (two * ma * mb + c1) * (two * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            acc += num / den;
        }
    }
    Ok(acc / real((positions * positions) as f64))
}
