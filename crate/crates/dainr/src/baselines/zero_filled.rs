//! Direct density-compensated reconstruction, no optimization involved.
//!
//! Each frame is recovered by weighting the measured samples with their
//! density-compensation weights, applying the gridded adjoint per coil, and
//! combining coils with conjugate sensitivity weighting (or a
//! root-sum-of-squares magnitude when no maps are available). At full
//! sampling this is close to an inverse transform; undersampled frames show
//! the classic radial streaking, which is exactly why it serves as the
//! reference floor for the learned methods.

use num_complex::Complex;

use crate::image::{ComplexImage, ImageSequence};
use crate::mri::{combine_coil_images, FrameAcquisition, GriddingPlan, KSpaceAcquisition};
use crate::{Error, Real, Result};

/// Reconstruct one frame. `maps = None` falls back to root-sum-of-squares,
/// which loses phase but needs no calibration.
pub fn zero_filled_frame<T: Real>(
    frame: &FrameAcquisition<T>,
    maps: Option<&[ComplexImage<T>]>,
    plan: &GriddingPlan<T>,
) -> ComplexImage<T> {
    let weighted: Vec<Vec<Complex<T>>> = frame
        .samples
        .iter()
        .map(|coil| {
            coil.iter()
                .zip(&frame.trajectory.weights)
                .map(|(&s, &w)| s * w)
                .collect()
        })
        .collect();
    let coil_images: Vec<ComplexImage<T>> =
        weighted.iter().map(|samples| plan.adjoint(samples)).collect();
    match maps {
        Some(maps) => combine_coil_images(&coil_images, maps),
        None => {
            let n = coil_images[0].size();
            let mut out = ComplexImage::zeros(n);
            for (i, o) in out.data_mut().iter_mut().enumerate() {
                let ss = coil_images
                    .iter()
                    .fold(T::zero(), |acc, img| acc + img.data()[i].norm_sqr());
                *o = Complex::new(ss.sqrt(), T::zero());
            }
            out
        }
    }
}

/// Reconstruct every frame of an acquisition.
pub fn zero_filled_recon<T: Real>(
    acq: &KSpaceAcquisition<T>,
    maps: Option<&[ComplexImage<T>]>,
) -> Result<ImageSequence<T>> {
    acq.validate()?;
    if let Some(maps) = maps {
        if maps.len() != acq.coils() {
            return Err(Error::ShapeMismatch(format!(
                "{} coil maps for {} coils",
                maps.len(),
                acq.coils()
            )));
        }
    }
    let frames = acq
        .frames
        .iter()
        .map(|frame| {
            let plan = GriddingPlan::new(acq.grid, &frame.trajectory.points);
            zero_filled_frame(frame, maps, &plan)
        })
        .collect();
    Ok(ImageSequence::new(frames))
}
