//! Exact non-uniform discrete Fourier transform.
//!
//! Direct evaluation of `s(k) = Σ_x image(x) · exp(-i k·x)` over centered
//! pixel coordinates `x ∈ {-n/2, ..., n/2-1}²`. Cost is `O(samples · n²)`,
//! which is fine for simulation and for validating the gridded transform,
//! but too slow to sit inside a training loop at full size.

use std::rc::Rc;

use num_complex::Complex;

use crate::autodiff::{CustomGrad, Tape, Tensor, Var};
use crate::image::ComplexImage;
use crate::Real;

/// Per-axis phasors `exp(-i k c)` for every centered coordinate `c`.
fn axis_phasors<T: Real>(k: T, grid: usize) -> Vec<Complex<T>> {
    let half = (grid / 2) as i64;
    (0..grid)
        .map(|i| {
            let coord = T::from_i64(i as i64 - half).unwrap();
            let (sin, cos) = (-k * coord).sin_cos();
            Complex::new(cos, sin)
        })
        .collect()
}

pub fn ndft_forward<T: Real>(image: &ComplexImage<T>, points: &[[T; 2]]) -> Vec<Complex<T>> {
    let n = image.size();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let px = axis_phasors(p[0], n);
        let py = axis_phasors(p[1], n);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (iy, &phase_y) in py.iter().enumerate() {
            let row = &image.data()[iy * n..(iy + 1) * n];
            let mut row_acc = Complex::new(T::zero(), T::zero());
            for (&v, &phase_x) in row.iter().zip(&px) {
                row_acc += v * phase_x;
            }
            acc += row_acc * phase_y;
        }
        out.push(acc);
    }
    out
}

/// Exact adjoint of [`ndft_forward`]: `x(r) = Σ_q s_q · exp(+i k_q·r)`.
pub fn ndft_adjoint<T: Real>(
    points: &[[T; 2]],
    samples: &[Complex<T>],
    grid: usize,
) -> ComplexImage<T> {
    assert_eq!(points.len(), samples.len(), "one sample per point");
    let mut image = ComplexImage::zeros(grid);
    for (p, &s) in points.iter().zip(samples) {
        let px = axis_phasors(p[0], grid);
        let py = axis_phasors(p[1], grid);
        for (iy, phase_y) in py.iter().enumerate() {
            let sy = s * phase_y.conj();
            let row = &mut image.data_mut()[iy * grid..(iy + 1) * grid];
            for (v, phase_x) in row.iter_mut().zip(&px) {
                *v += sy * phase_x.conj();
            }
        }
    }
    image
}

/// Tape operation applying [`ndft_forward`] to a two-channel `[n², 2]` image.
///
/// The transform is complex-linear, so the transpose of its real Jacobian is
/// exactly the complex adjoint — backward is [`ndft_adjoint`] applied to the
/// cotangent.
pub struct NdftOp<T> {
    points: Rc<Vec<[T; 2]>>,
    grid: usize,
}

impl<T: Real> NdftOp<T> {
    pub fn new(points: Rc<Vec<[T; 2]>>, grid: usize) -> Self {
        Self { points, grid }
    }
}

impl<T: Real> CustomGrad<T> for NdftOp<T> {
    fn name(&self) -> &'static str {
        "ndft"
    }

    fn backward(
        &self,
        _inputs: &[Tensor<T>],
        grad_out: &Tensor<T>,
        acc: &mut dyn FnMut(usize, Tensor<T>),
    ) {
        let cotangent: Vec<Complex<T>> = grad_out
            .data()
            .chunks_exact(2)
            .map(|p| Complex::new(p[0], p[1]))
            .collect();
        let image = ndft_adjoint(&self.points, &cotangent, self.grid);
        acc(0, Tensor::from_vec(vec![self.grid * self.grid, 2], image.to_interleaved()));
    }
}

/// Record an exact forward transform of `image` (`[n², 2]`) on the tape,
/// producing `[samples, 2]`.
pub fn ndft_op<T: Real>(
    tape: &mut Tape<T>,
    image: Var,
    points: Rc<Vec<[T; 2]>>,
    grid: usize,
) -> Var {
    let img = ComplexImage::from_interleaved(grid, tape.value(image).data())
        .expect("image var must be [n², 2]");
    let samples = ndft_forward(&img, &points);
    let mut flat = Vec::with_capacity(2 * samples.len());
    for s in &samples {
        flat.push(s.re);
        flat.push(s.im);
    }
    let value = Tensor::from_vec(vec![samples.len(), 2], flat);
    tape.custom(&[image], value, Rc::new(NdftOp::new(points, grid)))
}
