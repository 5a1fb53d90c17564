//! Gridded non-uniform FFT.
//!
//! Approximates [`ndft_forward`](super::ndft::ndft_forward) by deapodizing
//! the image, zero-padding it onto a 2x oversampled grid, taking an FFT, and
//! interpolating the requested k-space positions with a small Kaiser–Bessel
//! kernel. The adjoint runs the same three stages transposed — scatter,
//! unnormalized inverse FFT, extract — so `⟨F x, y⟩ = ⟨x, Fᴴ y⟩` holds to
//! machine precision even though both are approximations of the exact
//! transform.

use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::autodiff::{CustomGrad, Tape, Tensor, Var};
use crate::image::ComplexImage;
use crate::{real, Real};

/// `I₀(x)`, by its power series. Converges quickly for the kernel's range.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let f = half / k as f64;
        term *= f * f;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kernel shape parameter for a given width and oversampling factor.
pub fn beatty_beta(width: usize, oversampling: f64) -> f64 {
    let w = width as f64;
    std::f64::consts::PI
        * ((w * w) / (oversampling * oversampling) * (oversampling - 0.5) * (oversampling - 0.5)
            - 0.8)
            .sqrt()
}

/// Normalized Kaiser–Bessel kernel on `[-width/2, width/2]`.
fn kb_kernel(u: f64, width: f64, beta: f64) -> f64 {
    let t = 2.0 * u / width;
    let inside = 1.0 - t * t;
    if inside < 0.0 {
        0.0
    } else {
        bessel_i0(beta * inside.sqrt()) / bessel_i0(beta)
    }
}

/// Image-domain response of the kernel at centered pixel `c`: the continuous
/// Fourier transform `W · sinh(√(β² - (πWc/No)²)) / √(β² - (πWc/No)²) / I₀(β)`,
/// switching to the `sin` branch where the argument turns negative.
fn deapodization(c: f64, width: f64, beta: f64, oversampled: f64) -> f64 {
    let a = std::f64::consts::PI * width * c / oversampled;
    let d = beta * beta - a * a;
    let core = if d > 0.0 {
        let s = d.sqrt();
        s.sinh() / s
    } else if d < 0.0 {
        let s = (-d).sqrt();
        s.sin() / s
    } else {
        1.0
    };
    width * core / bessel_i0(beta)
}

/// Precomputed interpolation taps and FFT plans for one set of sample points.
pub struct GriddingPlan<T: Real> {
    grid: usize,
    oversampled: usize,
    width: usize,
    samples: usize,
    /// Wrapped oversampled-grid indices, `[samples * width]` per axis.
    taps_x: Vec<u32>,
    taps_y: Vec<u32>,
    weights_x: Vec<T>,
    weights_y: Vec<T>,
    /// `1 / C(c)` per axis, indexed by pixel.
    deapod_inv: Vec<T>,
    fft_forward: Arc<dyn Fft<T>>,
    fft_inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> GriddingPlan<T> {
    /// Plan with the default width-4 kernel on a 2x oversampled grid.
    pub fn new(grid: usize, points: &[[T; 2]]) -> Self {
        Self::with_params(grid, points, 2.0, 4)
    }

    pub fn with_params(grid: usize, points: &[[T; 2]], oversampling: f64, width: usize) -> Self {
        assert!(grid > 0 && width > 0, "degenerate plan");
        assert!(oversampling >= 1.0, "oversampling must not shrink the grid");
        let mut oversampled = ((grid as f64 * oversampling).round() as usize).max(grid);
        oversampled += oversampled % 2;
        let beta = beatty_beta(width, oversampled as f64 / grid as f64);
        let q = points.len();

        let mut taps_x = Vec::with_capacity(q * width);
        let mut taps_y = Vec::with_capacity(q * width);
        let mut weights_x = Vec::with_capacity(q * width);
        let mut weights_y = Vec::with_capacity(q * width);
        let fill = |k: f64, taps: &mut Vec<u32>, weights: &mut Vec<T>| {
            let u = k * oversampled as f64 / std::f64::consts::TAU;
            // The `width` integers closest to `u`.
            let j_start = (u - width as f64 / 2.0).ceil() as i64;
            for step in 0..width as i64 {
                let j = j_start + step;
                taps.push(j.rem_euclid(oversampled as i64) as u32);
                weights.push(real(kb_kernel(u - j as f64, width as f64, beta)));
            }
        };
        for p in points {
            fill(p[0].to_f64().unwrap(), &mut taps_x, &mut weights_x);
            fill(p[1].to_f64().unwrap(), &mut taps_y, &mut weights_y);
        }

        let deapod_inv = (0..grid)
            .map(|i| {
                let c = i as f64 - (grid / 2) as f64;
                real(1.0 / deapodization(c, width as f64, beta, oversampled as f64))
            })
            .collect();

        let mut planner = FftPlanner::new();
        Self {
            grid,
            oversampled,
            width,
            samples: q,
            taps_x,
            taps_y,
            weights_x,
            weights_y,
            deapod_inv,
            fft_forward: planner.plan_fft_forward(oversampled),
            fft_inverse: planner.plan_fft_inverse(oversampled),
        }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    fn buffer_index(&self, centered: i64) -> usize {
        centered.rem_euclid(self.oversampled as i64) as usize
    }

    /// All rows, then all columns (via transpose), with the given plan.
    fn fft_2d(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.oversampled;
        plan.process(buf);
        let mut transposed = vec![Complex::new(T::zero(), T::zero()); n * n];
        for r in 0..n {
            for c in 0..n {
                transposed[c * n + r] = buf[r * n + c];
            }
        }
        plan.process(&mut transposed);
        for r in 0..n {
            for c in 0..n {
                buf[r * n + c] = transposed[c * n + r];
            }
        }
    }

    pub fn forward(&self, image: &ComplexImage<T>) -> Vec<Complex<T>> {
        assert_eq!(image.size(), self.grid, "plan built for grid {}", self.grid);
        let (n, no) = (self.grid, self.oversampled);
        let half = (n / 2) as i64;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); no * no];
        for iy in 0..n {
            let by = self.buffer_index(iy as i64 - half);
            for ix in 0..n {
                let bx = self.buffer_index(ix as i64 - half);
                buf[by * no + bx] =
                    image.at(ix, iy) * (self.deapod_inv[ix] * self.deapod_inv[iy]);
            }
        }
        self.fft_2d(&mut buf, &self.fft_forward);

        let w = self.width;
        let mut out = Vec::with_capacity(self.samples);
        for q in 0..self.samples {
            let mut acc = Complex::new(T::zero(), T::zero());
            for b in 0..w {
                let ty = self.taps_y[q * w + b] as usize;
                let wy = self.weights_y[q * w + b];
                let row = &buf[ty * no..(ty + 1) * no];
                let mut row_acc = Complex::new(T::zero(), T::zero());
                for a in 0..w {
                    row_acc += row[self.taps_x[q * w + a] as usize] * self.weights_x[q * w + a];
                }
                acc += row_acc * wy;
            }
            out.push(acc);
        }
        out
    }

    /// Exact transpose of [`GriddingPlan::forward`].
    pub fn adjoint(&self, samples: &[Complex<T>]) -> ComplexImage<T> {
        assert_eq!(samples.len(), self.samples, "plan built for {} samples", self.samples);
        let (n, no, w) = (self.grid, self.oversampled, self.width);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); no * no];
        for (q, &s) in samples.iter().enumerate() {
            for b in 0..w {
                let ty = self.taps_y[q * w + b] as usize;
                let sy = s * self.weights_y[q * w + b];
                let row = &mut buf[ty * no..(ty + 1) * no];
                for a in 0..w {
                    row[self.taps_x[q * w + a] as usize] += sy * self.weights_x[q * w + a];
                }
            }
        }
        self.fft_2d(&mut buf, &self.fft_inverse);

        let half = (n / 2) as i64;
        let mut image = ComplexImage::zeros(n);
        for iy in 0..n {
            let by = self.buffer_index(iy as i64 - half);
            for ix in 0..n {
                let bx = self.buffer_index(ix as i64 - half);
                *image.at_mut(ix, iy) =
                    buf[by * no + bx] * (self.deapod_inv[ix] * self.deapod_inv[iy]);
            }
        }
        image
    }
}

/// Tape operation applying a [`GriddingPlan`] to a two-channel image.
pub struct NufftOp<T: Real> {
    plan: Rc<GriddingPlan<T>>,
}

impl<T: Real> CustomGrad<T> for NufftOp<T> {
    fn name(&self) -> &'static str {
        "nufft"
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
        let image = self.plan.adjoint(&cotangent);
        let n = self.plan.grid();
        acc(0, Tensor::from_vec(vec![n * n, 2], image.to_interleaved()));
    }
}

/// Record a gridded forward transform of `image` (`[n², 2]`) on the tape,
/// producing `[samples, 2]`.
pub fn nufft_op<T: Real>(tape: &mut Tape<T>, image: Var, plan: Rc<GriddingPlan<T>>) -> Var {
    let n = plan.grid();
    let img = ComplexImage::from_interleaved(n, tape.value(image).data())
        .expect("image var must be [n², 2]");
    let samples = plan.forward(&img);
    let mut flat = Vec::with_capacity(2 * samples.len());
    for s in &samples {
        flat.push(s.re);
        flat.push(s.im);
    }
    let value = Tensor::from_vec(vec![samples.len(), 2], flat);
    tape.custom(&[image], value, Rc::new(NufftOp { plan }))
}
