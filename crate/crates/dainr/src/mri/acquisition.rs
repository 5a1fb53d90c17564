//! Frame-by-frame k-space measurement sets.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

use super::trajectory::{acceleration_factor, Trajectory};

/// How the sample positions of an acquisition were laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SamplingScheme {
    /// Golden-angle radial spokes binned `spokes_per_frame` at a time. The
    /// scan is one continuous spoke sequence starting at global index
    /// `start_spoke`; frames carve consecutive runs out of it.
    Radial { spokes_per_frame: usize, start_spoke: usize },
    /// One fully sampled Cartesian grid per frame (externally acquired
    /// ground-truth style data).
    Cartesian,
}

/// One frame's measurements: where k-space was sampled, and what every coil
/// saw there.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameAcquisition<T> {
    pub trajectory: Trajectory<T>,
    /// `samples[c][i]` is coil `c` at trajectory point `i`.
    pub samples: Vec<Vec<Complex<T>>>,
}

/// A dynamic acquisition: τ frames of multi-coil non-Cartesian samples over
/// a fixed reconstruction grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceAcquisition<T> {
    /// Reconstruction grid side length (N).
    pub grid: usize,
    pub scheme: SamplingScheme,
    pub frames: Vec<FrameAcquisition<T>>,
}

impl<T: Real> KSpaceAcquisition<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn coils(&self) -> usize {
        self.frames.first().map_or(0, |f| f.samples.len())
    }

    pub fn samples_per_frame(&self) -> usize {
        self.frames.first().map_or(0, |f| f.trajectory.len())
    }

    /// Undersampling relative to a fully sampled Cartesian scan of the same
    /// grid; 1 for Cartesian data.
    pub fn acceleration(&self) -> f64 {
        match self.scheme {
            SamplingScheme::Radial { spokes_per_frame, .. } => {
                acceleration_factor(self.grid, spokes_per_frame)
            }
            SamplingScheme::Cartesian => 1.0,
        }
    }

    /// Check the cross-frame shape invariants: a constant coil count, sample
    /// vectors matching their trajectory, one weight per point.
    pub fn validate(&self) -> Result<()> {
        let coils = self.coils();
        if coils == 0 {
            return Err(Error::InvalidArgument("acquisition has no coils".into()));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.samples.len() != coils {
                return Err(Error::ShapeMismatch(format!(
                    "frame {t} has {} coils, frame 0 has {coils}",
                    frame.samples.len()
                )));
            }
            if frame.trajectory.weights.len() != frame.trajectory.points.len() {
                return Err(Error::ShapeMismatch(format!(
                    "frame {t}: {} weights for {} points",
                    frame.trajectory.weights.len(),
                    frame.trajectory.points.len()
                )));
            }
            for (c, coil) in frame.samples.iter().enumerate() {
                if coil.len() != frame.trajectory.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "frame {t} coil {c}: {} samples for {} trajectory points",
                        coil.len(),
                        frame.trajectory.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> KSpaceAcquisition<U> {
        KSpaceAcquisition {
            grid: self.grid,
            scheme: self.scheme,
            frames: self
                .frames
                .iter()
                .map(|f| FrameAcquisition {
                    trajectory: Trajectory {
                        points: f
                            .trajectory
                            .points
                            .iter()
                            .map(|p| [crate::scalar::cast(p[0]), crate::scalar::cast(p[1])])
                            .collect(),
                        weights: f.trajectory.weights.iter().map(|&w| crate::scalar::cast(w)).collect(),
                    },
                    samples: f
                        .samples
                        .iter()
                        .map(|coil| {
                            coil.iter()
                                .map(|z| Complex::new(crate::scalar::cast(z.re), crate::scalar::cast(z.im)))
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mri::trajectory::golden_angle_frame;

    fn tiny() -> KSpaceAcquisition<f64> {
        let trajectory = golden_angle_frame(2, 4, 0, 0);
        let samples = vec![vec![Complex::new(1.0, 0.0); trajectory.len()]; 3];
        KSpaceAcquisition {
            grid: 4,
            scheme: SamplingScheme::Radial { spokes_per_frame: 2, start_spoke: 0 },
            frames: vec![FrameAcquisition { trajectory, samples }],
        }
    }

    #[test]
    fn shape_accessors_and_validation() {
        let acq = tiny();
        assert_eq!(acq.len(), 1);
        assert_eq!(acq.coils(), 3);
        assert_eq!(acq.samples_per_frame(), 8);
        assert_eq!(acq.acceleration(), 2.0);
        acq.validate().unwrap();
    }

    #[test]
    fn ragged_coils_are_rejected() {
        let mut acq = tiny();
        acq.frames[0].samples[1].pop();
        assert!(matches!(acq.validate(), Err(Error::ShapeMismatch(_))));
    }
}
