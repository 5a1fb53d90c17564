//! Multi-coil acquisition model: image → coil images → k-space samples.

use std::rc::Rc;

use num_complex::Complex;

use crate::autodiff::{Tape, Var};
use crate::image::ComplexImage;
use crate::Real;

use super::ndft::{ndft_adjoint, ndft_forward, ndft_op};
use super::nufft::{nufft_op, GriddingPlan};

/// Single-coil k-space transform for one fixed trajectory.
///
/// `Exact` evaluates the non-uniform DFT directly and is the reference;
/// `Gridded` is the fast approximation used inside optimization loops.
pub enum KspaceOperator<T: Real> {
    Exact { grid: usize, points: Rc<Vec<[T; 2]>> },
    Gridded(Rc<GriddingPlan<T>>),
}

impl<T: Real> KspaceOperator<T> {
    pub fn exact(grid: usize, points: Vec<[T; 2]>) -> Self {
        Self::Exact { grid, points: Rc::new(points) }
    }

    pub fn gridded(grid: usize, points: &[[T; 2]]) -> Self {
        Self::Gridded(Rc::new(GriddingPlan::new(grid, points)))
    }

    pub fn grid(&self) -> usize {
        match self {
            Self::Exact { grid, .. } => *grid,
            Self::Gridded(plan) => plan.grid(),
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            Self::Exact { points, .. } => points.len(),
            Self::Gridded(plan) => plan.samples(),
        }
    }

    pub fn forward(&self, image: &ComplexImage<T>) -> Vec<Complex<T>> {
        match self {
            Self::Exact { points, .. } => ndft_forward(image, points),
            Self::Gridded(plan) => plan.forward(image),
        }
    }

    pub fn adjoint(&self, samples: &[Complex<T>]) -> ComplexImage<T> {
        match self {
            Self::Exact { grid, points } => ndft_adjoint(points, samples, *grid),
            Self::Gridded(plan) => plan.adjoint(samples),
        }
    }

    /// Record the transform of a two-channel `[n², 2]` image on the tape.
    pub fn apply(&self, tape: &mut Tape<T>, image: Var) -> Var {
        match self {
            Self::Exact { grid, points } => ndft_op(tape, image, points.clone(), *grid),
            Self::Gridded(plan) => nufft_op(tape, image, plan.clone()),
        }
    }
}

/// Exact multi-coil acquisition of one frame: `s_c = F(S_c ⊙ m)`.
pub fn simulate_multicoil<T: Real>(
    image: &ComplexImage<T>,
    maps: &[ComplexImage<T>],
    points: &[[T; 2]],
) -> Vec<Vec<Complex<T>>> {
    maps.iter()
        .map(|map| {
            let weighted = ComplexImage::from_vec(
                image.size(),
                image.data().iter().zip(map.data()).map(|(&z, &s)| z * s).collect(),
            );
            ndft_forward(&weighted, points)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mri::coils::birdcage_coil_maps;
    use crate::mri::trajectory::golden_angle_frame;
    use crate::rng;

    #[test]
    fn gridded_tracks_exact_per_coil() {
        let n = 16;
        let mut r = rng::seeded(20);
        let img = ComplexImage::from_vec(
            n,
            (0..n * n)
                .map(|_| Complex::new(rng::uniform(&mut r, -1.0, 1.0), rng::uniform(&mut r, -1.0, 1.0)))
                .collect::<Vec<Complex<f64>>>(),
        );
        let maps = birdcage_coil_maps::<f64>(3, n);
        let traj = golden_angle_frame::<f64>(4, n, 0, 0);
        let exact = simulate_multicoil(&img, &maps, &traj.points);

        let op = KspaceOperator::gridded(n, &traj.points);
        for (c, map) in maps.iter().enumerate() {
            let weighted = ComplexImage::from_vec(
                n,
                img.data().iter().zip(map.data()).map(|(&z, &s)| z * s).collect(),
            );
            let approx_s = op.forward(&weighted);
            let num: f64 =
                approx_s.iter().zip(&exact[c]).map(|(a, b)| (a - b).norm_sqr()).sum();
            let den: f64 = exact[c].iter().map(|b| b.norm_sqr()).sum();
            assert!((num / den).sqrt() < 1e-3, "coil {c} drifted from exact transform");
        }
    }

    #[test]
    fn operator_kinds_agree_on_shape() {
        let n = 8;
        let traj = golden_angle_frame::<f64>(2, n, 0, 0);
        let exact = KspaceOperator::exact(n, traj.points.clone());
        let gridded = KspaceOperator::gridded(n, &traj.points);
        assert_eq!(exact.grid(), gridded.grid());
        assert_eq!(exact.samples(), gridded.samples());
        assert_eq!(exact.samples(), traj.len());
    }
}
