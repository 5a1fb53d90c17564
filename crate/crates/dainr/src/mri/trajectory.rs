//! k-space sampling trajectories.

use crate::{real, Real};

/// Rotation between consecutive radial spokes, in degrees.
///
/// Quarter-degree increments stay exactly representable in `f64`, so spoke
/// angles are reproducible no matter how many spokes have been played out.
pub const GOLDEN_ANGLE_DEG: f64 = 111.25;

/// Non-Cartesian sample positions with density-compensation weights.
///
/// Points live in `[-π, π)²` (radians per pixel); `weights` integrate k-space
/// against `1/(2π)²`, so a weighted adjoint approximates the inverse
/// transform directly.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Angle of the `index`-th spoke of a golden-angle scan, in `[0, 180)` degrees.
pub fn spoke_angle_deg(index: usize) -> f64 {
    (index as f64 * GOLDEN_ANGLE_DEG).rem_euclid(180.0)
}

/// Radial trajectory for one frame of a golden-angle acquisition.
///
/// The scan plays spokes continuously; frame `k` of an `spokes`-per-frame
/// binning uses global spoke indices `offset + k*spokes ..`. Each spoke holds
/// `samples` equispaced radii spanning the full diameter, `r_i = π(2i - n)/n`,
/// which places one sample exactly on DC when `samples` is even.
pub fn golden_angle_frame<T: Real>(
    spokes: usize,
    samples: usize,
    frame: usize,
    offset: usize,
) -> Trajectory<T> {
    assert!(spokes > 0 && samples > 0, "empty trajectory");
    let mut points = Vec::with_capacity(spokes * samples);
    let mut radii = Vec::with_capacity(spokes * samples);
    for j in 0..spokes {
        let theta = spoke_angle_deg(offset + frame * spokes + j).to_radians();
        let (sin_t, cos_t) = theta.sin_cos();
        for i in 0..samples {
            let r = std::f64::consts::PI * (2 * i as i64 - samples as i64) as f64 / samples as f64;
            points.push([real(r * cos_t), real(r * sin_t)]);
            radii.push(r);
        }
    }
    Trajectory { weights: radial_weights(&radii, spokes, samples), points }
}

/// Ram-Lak style density compensation: each sample covers an annular sector
/// of area `|r| Δr Δθ`, except the DC samples, which split the central disc
/// of radius `Δr/2` between themselves. Everything carries the `1/(2π)²`
/// inverse-transform normalization.
fn radial_weights<T: Real>(radii: &[f64], spokes: usize, samples: usize) -> Vec<T> {
    let dr = std::f64::consts::TAU / samples as f64;
    let dtheta = std::f64::consts::PI / spokes as f64;
    let inv_four_pi_sq = 1.0 / (std::f64::consts::TAU * std::f64::consts::TAU);
    let dc_count = radii.iter().filter(|&&r| r == 0.0).count();
    let dc_weight = if dc_count > 0 {
        std::f64::consts::PI * (dr / 2.0) * (dr / 2.0) / dc_count as f64 * inv_four_pi_sq
    } else {
        0.0
    };
    radii
        .iter()
        .map(|&r| {
            if r == 0.0 {
                real(dc_weight)
            } else {
                real(r.abs() * dr * dtheta * inv_four_pi_sq)
            }
        })
        .collect()
}

/// Fully sampled Cartesian grid, `k = 2π(i - n/2)/n` per axis.
///
/// With the `1/(2π)²` normalization every sample weighs `1/n²`, so the
/// weighted adjoint reduces to the ordinary inverse DFT.
pub fn cartesian_trajectory<T: Real>(grid: usize) -> Trajectory<T> {
    let mut points = Vec::with_capacity(grid * grid);
    let w = real::<T>(1.0 / (grid * grid) as f64);
    for iy in 0..grid {
        let ky = std::f64::consts::TAU * (iy as f64 - (grid / 2) as f64) / grid as f64;
        for ix in 0..grid {
            let kx = std::f64::consts::TAU * (ix as f64 - (grid / 2) as f64) / grid as f64;
            points.push([real(kx), real(ky)]);
        }
    }
    Trajectory { weights: vec![w; points.len()], points }
}

/// Acceleration factor of an `spokes`-per-frame radial binning relative to a
/// fully sampled `grid`-line Cartesian scan.
pub fn acceleration_factor(grid: usize, spokes: usize) -> f64 {
    grid as f64 / spokes as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_spoke_angles_are_exact() {
        assert_eq!(spoke_angle_deg(0), 0.0);
        assert_eq!(spoke_angle_deg(1), 111.25);
        assert_eq!(spoke_angle_deg(2), 42.5);
        assert_eq!(spoke_angle_deg(3), 153.75);
        assert_eq!(spoke_angle_deg(4), 85.0);
    }

    #[test]
    fn frames_continue_the_spoke_sequence() {
        let a: Trajectory<f64> = golden_angle_frame(3, 8, 1, 0);
        let b: Trajectory<f64> = golden_angle_frame(3, 8, 0, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn acceleration_factors_match_protocols() {
        let cases = [(128, 21, 6.1), (128, 13, 9.8), (128, 5, 25.6), (384, 34, 11.3)];
        for (grid, spokes, expected) in cases {
            let af = acceleration_factor(grid, spokes);
            assert_relative_eq!((af * 10.0).round() / 10.0, expected);
        }
    }

    #[test]
    fn spokes_span_the_full_diameter() {
        let t: Trajectory<f64> = golden_angle_frame(1, 8, 0, 0);
        let radii: Vec<f64> = t
            .points
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() * p[0].signum())
            .collect();
        assert_relative_eq!(radii[0], -std::f64::consts::PI);
        assert_eq!(radii[4], 0.0);
        assert!(radii.windows(2).all(|w| w[0] < w[1]));
        assert!(*radii.last().unwrap() < std::f64::consts::PI);
    }

    #[test]
    fn dc_samples_share_the_central_disc() {
        let spokes = 5;
        let samples = 16;
        let t: Trajectory<f64> = golden_angle_frame(spokes, samples, 0, 0);
        let dr = std::f64::consts::TAU / samples as f64;
        let norm = (std::f64::consts::TAU * std::f64::consts::TAU).recip();
        let dc: Vec<f64> = t
            .points
            .iter()
            .zip(&t.weights)
            .filter(|(p, _)| p[0] == 0.0 && p[1] == 0.0)
            .map(|(_, &w)| w)
            .collect();
        assert_eq!(dc.len(), spokes);
        let expected = std::f64::consts::PI * (dr / 2.0) * (dr / 2.0) / spokes as f64 * norm;
        for w in dc {
            assert_relative_eq!(w, expected);
        }
        assert!(t.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn cartesian_weights_sum_to_one() {
        let t: Trajectory<f64> = cartesian_trajectory(8);
        assert_eq!(t.len(), 64);
        assert_relative_eq!(t.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(t.points.iter().all(|p| p
            .iter()
            .all(|&c| (-std::f64::consts::PI..std::f64::consts::PI).contains(&c))));
    }
}
