//! Data preparation for the two interpolation protocols.
//!
//! Spatial: train against acquisitions re-simulated from a center-cropped
//! k-space (a genuinely low-resolution ground truth), then query the model on
//! a finer lattice than it ever saw. Temporal: train on an evenly thinned
//! subset of frames at their *original* time coordinates, then query the
//! held-out times. Both reuse the ordinary training loop; everything here
//! just builds its inputs.

use rustfft::FftPlanner;

use num_complex::Complex;

use crate::image::{ComplexImage, ImageSequence};
use crate::model::DaInrModel;
use crate::mri::KSpaceAcquisition;
use crate::train::{FeatureBank, StepFrame};
use crate::{Error, Real, Result};

/// Supported spatial subsampling factors.
const SPATIAL_FACTORS: [f64; 3] = [1.2, 1.5, 2.0];

/// Supported temporal thinning strides.
const TEMPORAL_STRIDES: [usize; 2] = [2, 3];

/// Training-grid side for subsampling factor `f`: `2·round(n/2f)`, kept even
/// so the k-space crop stays centered on DC.
pub fn lowres_size(n: usize, factor: f64) -> Result<usize> {
    if !SPATIAL_FACTORS.iter().any(|&f| (f - factor).abs() < 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "spatial factor {factor} not in {SPATIAL_FACTORS:?}"
        )));
    }
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("image size {n} must be even")));
    }
    let lo = 2 * ((n as f64 / (2.0 * factor)).round() as usize);
    if lo < 8 {
        return Err(Error::InvalidArgument(format!(
            "size {n} / factor {factor} leaves a {lo}-pixel grid"
        )));
    }
    Ok(lo)
}

/// Low-resolution counterpart of a sequence: per frame, take the centered
/// Cartesian spectrum, keep the central `lo×lo` block, and invert it on the
/// coarse grid. Amplitudes are preserved — a constant image stays put, and
/// any `lo`-bandlimited image survives the round trip exactly.
pub fn lowres_sequence<T: Real>(
    frames: &ImageSequence<T>,
    lo: usize,
) -> Result<ImageSequence<T>> {
    let n = frames.size();
    if lo % 2 != 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "grid sizes must be even to center the crop, got {n} -> {lo}"
        )));
    }
    if lo < 2 || lo > n {
        return Err(Error::InvalidArgument(format!("cannot resize {n} down to {lo}")));
    }
    let norm = T::one() / crate::real::<T>((n * n) as f64);
    let out = frames
        .iter()
        .map(|frame| {
            let mut spectrum = to_modular(frame);
            centered_fft2(&mut spectrum, n, false);
            let mut cropped = vec![Complex::new(T::zero(), T::zero()); lo * lo];
            let half = (lo / 2) as i64;
            for ky in -half..half {
                for kx in -half..half {
                    cropped[buffer_index(ky, lo) * lo + buffer_index(kx, lo)] =
                        spectrum[buffer_index(ky, n) * n + buffer_index(kx, n)];
                }
            }
            centered_fft2(&mut cropped, lo, true);
            for z in &mut cropped {
                *z = *z * norm;
            }
            from_modular(&cropped, lo)
        })
        .collect();
    Ok(ImageSequence::new(out))
}

/// Buffer slot of a centered index: the usual modular shift that puts DC at 0.
fn buffer_index(centered: i64, n: usize) -> usize {
    centered.rem_euclid(n as i64) as usize
}

/// In-place 2D DFT, unnormalized in both directions, over data whose
/// centered indices were already mapped through [`buffer_index`].
fn centered_fft2<T: Real>(data: &mut [Complex<T>], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n);
    let mut planner = FftPlanner::new();
    let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_exact_mut(n) {
        plan.process(row);
    }
    let mut transposed = vec![Complex::new(T::zero(), T::zero()); n * n];
    for r in 0..n {
        for c in 0..n {
            transposed[c * n + r] = data[r * n + c];
        }
    }
    for row in transposed.chunks_exact_mut(n) {
        plan.process(row);
    }
    for r in 0..n {
        for c in 0..n {
            data[r * n + c] = transposed[c * n + r];
        }
    }
}

/// Natural row-major image to modular (DC-at-slot-0) layout.
fn to_modular<T: Real>(image: &ComplexImage<T>) -> Vec<Complex<T>> {
    let n = image.size();
    let half = (n / 2) as i64;
    let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
    for iy in 0..n {
        let by = buffer_index(iy as i64 - half, n);
        for ix in 0..n {
            out[by * n + buffer_index(ix as i64 - half, n)] = image.at(ix, iy);
        }
    }
    out
}

fn from_modular<T: Real>(buf: &[Complex<T>], n: usize) -> ComplexImage<T> {
    let half = (n / 2) as i64;
    let mut image = ComplexImage::zeros(n);
    for iy in 0..n {
        let by = buffer_index(iy as i64 - half, n);
        for ix in 0..n {
            *image.at_mut(ix, iy) = buf[by * n + buffer_index(ix as i64 - half, n)];
        }
    }
    image
}

/// Frame indices retained when keeping every `stride`-th frame of `total`.
pub fn kept_frames(total: usize, stride: usize) -> Result<Vec<usize>> {
    if !TEMPORAL_STRIDES.contains(&stride) {
        return Err(Error::InvalidArgument(format!(
            "temporal stride {stride} not in {TEMPORAL_STRIDES:?}"
        )));
    }
    if total < 4 {
        return Err(Error::InvalidArgument(format!(
            "temporal thinning needs at least 4 frames, got {total}"
        )));
    }
    Ok((0..total).step_by(stride).collect())
}

/// Acquisition containing only the chosen frames, in the given order.
pub fn subset_acquisition<T: Real>(
    acq: &KSpaceAcquisition<T>,
    kept: &[usize],
) -> Result<KSpaceAcquisition<T>> {
    if kept.is_empty() {
        return Err(Error::InvalidArgument("empty frame subset".into()));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= acq.len()) {
        return Err(Error::InvalidArgument(format!(
            "frame {bad} outside the {}-frame acquisition",
            acq.len()
        )));
    }
    Ok(KSpaceAcquisition {
        grid: acq.grid,
        scheme: acq.scheme,
        frames: kept.iter().map(|&k| acq.frames[k].clone()).collect(),
    })
}

/// Everything the temporal protocol feeds into the shared training loop.
pub struct TemporalProtocol<T: Real> {
    /// Original length of the sequence (the inference frame count).
    pub total: usize,
    pub kept: Vec<usize>,
    /// The thinned acquisition the data term is built from.
    pub kept_acq: KSpaceAcquisition<T>,
    /// One step per kept frame, times taken from the original indices.
    pub steps: Vec<StepFrame<T>>,
    /// Extractor inputs per *original* frame, present iff the model's
    /// feature pathway is enabled.
    pub bank: Option<FeatureBank<T>>,
}

/// Thin the acquisition to every `stride`-th frame and lay out the training
/// schedule. The canonical frame must survive the thinning — its time is
/// pinned to zero, and pinning a frame nobody measures would let the whole
/// sequence drift.
pub fn temporal_protocol<T: Real>(
    model: &DaInrModel<T>,
    acq: &KSpaceAcquisition<T>,
    maps: &[ComplexImage<T>],
    stride: usize,
) -> Result<TemporalProtocol<T>> {
    let total = acq.len();
    let kept = kept_frames(total, stride)?;
    if !kept.contains(&model.config().canonical_index) {
        return Err(Error::InvalidArgument(format!(
            "canonical frame {} is dropped by stride {stride}",
            model.config().canonical_index
        )));
    }
    let kept_acq = subset_acquisition(acq, &kept)?;

    let (bank, blocks) = match model.extractor() {
        None => (None, None),
        Some(fx) => {
            if fx.input_frames() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "temporal features take 2 input frames, extractor wants {}",
                    fx.input_frames()
                )));
            }
            let bank = FeatureBank::for_temporal(&kept_acq, maps, &kept, total)?;
            let blocks = bank.extract(fx, model.config().grid)?;
            (Some(bank), Some(blocks))
        }
    };

    let steps = kept
        .iter()
        .enumerate()
        .map(|(i, &k)| StepFrame {
            acq_frame: i,
            label: k,
            time: model.frame_time(k, total),
            features: blocks.as_ref().map(|b| b[k].clone()),
        })
        .collect();

    Ok(TemporalProtocol { total, kept, kept_acq, steps, bank })
}
