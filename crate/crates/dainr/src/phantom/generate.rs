//! Analytic dynamic phantoms and their simulated acquisition.
//!
//! A phantom is a sum of ellipses, each carrying a complex intensity and a
//! temporal behaviour: static, periodically "beating" (axes scale
//! sinusoidally, a cardiac cine analog), or enhancing along a
//! ramp-then-plateau curve (a contrast-uptake analog). Rasterization is
//! analytic — a pixel belongs to an ellipse iff its normalized quadratic
//! form is at most one — so ground truth is exactly reproducible.

use num_complex::Complex;
use rand_chacha::ChaCha20Rng;

use crate::image::{ComplexImage, ImageSequence};
use crate::mri::{
    birdcage_coil_maps, golden_angle_frame, simulate_multicoil, FrameAcquisition,
    KSpaceAcquisition, SamplingScheme,
};
use crate::rng;
use crate::{real, Error, Real, Result};

/// Temporal behaviour of one phantom component. Time is measured in frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dynamics<T> {
    Static,
    /// Both semi-axes scale by `1 + amplitude·sin(2π·t/period + phase)`.
    Beat { amplitude: T, period: T, phase: T },
    /// Intensity gain ramps from zero at frame `start` with `slope` per
    /// frame, clamped at `plateau`. Geometry stays fixed.
    Uptake { start: T, slope: T, plateau: T },
}

impl<T: Real> Dynamics<T> {
    /// Axis scale factor at frame time `t`.
    fn scale(&self, t: T) -> T {
        match *self {
            Dynamics::Beat { amplitude, period, phase } => {
                T::one() + amplitude * (T::TAU() * t / period + phase).sin()
            }
            _ => T::one(),
        }
    }

    /// Largest axis scale over all time, for field-of-view checks.
    fn max_scale(&self) -> T {
        match *self {
            Dynamics::Beat { amplitude, .. } => T::one() + amplitude.abs(),
            _ => T::one(),
        }
    }

    /// Intensity gain at frame time `t`.
    fn gain(&self, t: T) -> T {
        match *self {
            Dynamics::Uptake { start, slope, plateau } => {
                (slope * (t - start)).max(T::zero()).min(plateau)
            }
            _ => T::one(),
        }
    }
}

/// One elliptical component in normalized `[-1, 1]²` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse<T> {
    pub center: [T; 2],
    /// Semi-axes before rotation; both must be positive.
    pub axes: [T; 2],
    /// Counterclockwise rotation, radians.
    pub rotation: T,
    /// Complex intensity added inside the ellipse. Overlaps sum.
    pub intensity: Complex<T>,
    pub dynamics: Dynamics<T>,
}

/// A complete dynamic phantom description.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicPhantomSpec<T> {
    /// Image side length N.
    pub size: usize,
    /// Frame count τ.
    pub frames: usize,
    pub components: Vec<Ellipse<T>>,
}

impl<T: Real> DynamicPhantomSpec<T> {
    /// Beating-ellipse cardiac analog: a torso with dark lung fields, a
    /// myocardial ring whose blood pool contracts and refills once over the
    /// sequence, and two static markers for spatial structure.
    pub fn beating(size: usize, frames: usize) -> Self {
        let tau = real::<T>(frames.max(1) as f64);
        let beat = |amplitude: f64| Dynamics::Beat {
            amplitude: real(amplitude),
            period: tau,
            phase: T::zero(),
        };
        let components = vec![
            Ellipse {
                center: [T::zero(), T::zero()],
                axes: [real(0.80), real(0.72)],
                rotation: real(0.08),
                intensity: Complex::new(real(0.32), real(0.02)),
                dynamics: Dynamics::Static,
            },
            Ellipse {
                center: [real(0.40), real(0.16)],
                axes: [real(0.20), real(0.30)],
                rotation: real(-0.25),
                intensity: Complex::new(real(-0.20), T::zero()),
                dynamics: Dynamics::Static,
            },
            Ellipse {
                center: [real(-0.42), real(0.16)],
                axes: [real(0.20), real(0.30)],
                rotation: real(0.25),
                intensity: Complex::new(real(-0.20), T::zero()),
                dynamics: Dynamics::Static,
            },
            // Myocardial ring: outer wall thickens slightly while the pool
            // inside it contracts, so the wall-to-pool contrast moves.
            Ellipse {
                center: [real(-0.12), real(-0.16)],
                axes: [real(0.34), real(0.29)],
                rotation: real(0.30),
                intensity: Complex::from_polar(real(0.48), real(0.20)),
                dynamics: beat(0.05),
            },
            Ellipse {
                center: [real(-0.12), real(-0.16)],
                axes: [real(0.20), real(0.16)],
                rotation: real(0.30),
                intensity: Complex::from_polar(real(0.34), real(-0.40)),
                dynamics: beat(-0.28),
            },
            Ellipse {
                center: [real(-0.04), real(-0.12)],
                axes: [real(0.045), real(0.045)],
                rotation: T::zero(),
                intensity: Complex::new(real(-0.14), T::zero()),
                dynamics: Dynamics::Static,
            },
            Ellipse {
                center: [real(0.42), real(-0.38)],
                axes: [real(0.07), real(0.07)],
                rotation: T::zero(),
                intensity: Complex::from_polar(real(0.50), real(0.50)),
                dynamics: Dynamics::Static,
            },
        ];
        Self { size, frames, components }
    }

    /// Contrast-uptake analog: static anatomy plus two enhancing regions —
    /// a small fast "aorta" and a larger slow "liver". ROI curves over
    /// these regions trace their programmed ramps.
    pub fn uptake(size: usize, frames: usize) -> Self {
        let tau = frames.max(1) as f64;
        let components = vec![
            Ellipse {
                center: [T::zero(), T::zero()],
                axes: [real(0.82), real(0.70)],
                rotation: real(-0.05),
                intensity: Complex::new(real(0.30), real(0.02)),
                dynamics: Dynamics::Static,
            },
            Ellipse {
                center: [real(0.24), real(0.06)],
                axes: [real(0.38), real(0.26)],
                rotation: real(-0.20),
                intensity: Complex::new(real(0.16), T::zero()),
                dynamics: Dynamics::Static,
            },
            Ellipse {
                center: [real(0.24), real(0.06)],
                axes: [real(0.38), real(0.26)],
                rotation: real(-0.20),
                intensity: Complex::new(real(0.26), real(0.04)),
                dynamics: Dynamics::Uptake {
                    start: real(0.30 * tau),
                    slope: real(1.0 / (0.45 * tau)),
                    plateau: T::one(),
                },
            },
            Ellipse {
                center: [real(-0.30), real(0.30)],
                axes: [real(0.08), real(0.08)],
                rotation: T::zero(),
                intensity: Complex::new(real(0.10), T::zero()),
                dynamics: Dynamics::Static,
            },
            Ellipse {
                center: [real(-0.30), real(0.30)],
                axes: [real(0.08), real(0.08)],
                rotation: T::zero(),
                intensity: Complex::new(real(0.55), real(0.06)),
                dynamics: Dynamics::Uptake {
                    start: real(0.12 * tau),
                    slope: real(1.0 / (0.18 * tau)),
                    plateau: T::one(),
                },
            },
        ];
        Self { size, frames, components }
    }

    /// Reject specs whose components could leave the field of view or carry
    /// unbounded intensities. The bound is conservative: a rotated ellipse
    /// is contained in the disc of its larger semi-axis.
    pub fn validate(&self) -> Result<()> {
        if self.size < 2 || self.frames == 0 {
            return Err(Error::InvalidArgument(format!(
                "phantom needs size ≥ 2 and ≥ 1 frame, got {}×{} over {} frames",
                self.size, self.size, self.frames
            )));
        }
        for (i, e) in self.components.iter().enumerate() {
            let finite = e.center.iter().chain(&e.axes).all(|v| v.is_finite())
                && e.rotation.is_finite()
                && e.intensity.re.is_finite()
                && e.intensity.im.is_finite();
            if !finite || e.axes[0] <= T::zero() || e.axes[1] <= T::zero() {
                return Err(Error::InvalidArgument(format!(
                    "component {i} has non-finite or non-positive geometry"
                )));
            }
            let reach = e.axes[0].max(e.axes[1]) * e.dynamics.max_scale();
            if e.center[0].abs() + reach > T::one() || e.center[1].abs() + reach > T::one() {
                return Err(Error::InvalidArgument(format!(
                    "component {i} leaves the field of view at some frame"
                )));
            }
        }
        Ok(())
    }
}

/// Rasterize every frame of a phantom.
pub fn generate_phantom<T: Real>(spec: &DynamicPhantomSpec<T>) -> Result<ImageSequence<T>> {
    spec.validate()?;
    let n = spec.size;
    let half = real::<T>((n / 2) as f64);
    let px = |i: usize| (real::<T>(i as f64) - half) / half;
    let frames = (0..spec.frames)
        .map(|k| {
            let t = real::<T>(k as f64);
            let mut img = ComplexImage::zeros(n);
            for e in &spec.components {
                let s = e.dynamics.scale(t);
                let (a, b) = (e.axes[0] * s, e.axes[1] * s);
                let w = e.intensity * e.dynamics.gain(t);
                if w.norm_sqr() == T::zero() {
                    continue;
                }
                let (sin_r, cos_r) = e.rotation.sin_cos();
                for iy in 0..n {
                    let dy = px(iy) - e.center[1];
                    for ix in 0..n {
                        let dx = px(ix) - e.center[0];
                        let u = (cos_r * dx + sin_r * dy) / a;
                        let v = (cos_r * dy - sin_r * dx) / b;
                        if u * u + v * v <= T::one() {
                            *img.at_mut(ix, iy) += w;
                        }
                    }
                }
            }
            img
        })
        .collect();
    Ok(ImageSequence::new(frames))
}

/// Smooth synthetic receive sensitivities: the deterministic birdcage
/// layout, given a seed-dependent global phase per coil. Phase rotation
/// keeps the sum-of-squares normalization bit-exact, so the same seed
/// always reproduces the same maps and Σ|S_c|² stays 1.
pub fn generate_coil_maps<T: Real>(coils: usize, size: usize, seed: u64) -> Vec<ComplexImage<T>> {
    let maps = birdcage_coil_maps::<T>(coils, size);
    if coils <= 1 {
        return maps;
    }
    let mut r: ChaCha20Rng = rng::seeded(seed);
    maps.into_iter()
        .map(|m| {
            let rot = Complex::from_polar(
                T::one(),
                rng::uniform(&mut r, -std::f64::consts::PI, std::f64::consts::PI),
            );
            ComplexImage::from_vec(size, m.data().iter().map(|&z| z * rot).collect())
        })
        .collect()
}

/// Simulate a retrospectively undersampled golden-angle acquisition of a
/// known image sequence: frame k is measured along its own spoke bin with
/// the exact transform, coil by coil.
pub fn retrospective_undersample<T: Real>(
    gt: &ImageSequence<T>,
    maps: &[ComplexImage<T>],
    spokes_per_frame: usize,
    start_spoke: usize,
) -> Result<KSpaceAcquisition<T>> {
    if spokes_per_frame == 0 {
        return Err(Error::InvalidArgument("spokes_per_frame must be ≥ 1".into()));
    }
    if maps.is_empty() {
        return Err(Error::InvalidArgument("need at least one coil map".into()));
    }
    let n = gt.size();
    if maps.iter().any(|m| m.size() != n) {
        return Err(Error::ShapeMismatch(format!(
            "coil maps are {}×{0}, ground truth is {n}×{n}",
            maps[0].size()
        )));
    }
    let frames = gt
        .iter()
        .enumerate()
        .map(|(k, frame)| {
            let trajectory = golden_angle_frame(spokes_per_frame, n, k, start_spoke);
            let samples = simulate_multicoil(frame, maps, &trajectory.points);
            FrameAcquisition { trajectory, samples }
        })
        .collect();
    Ok(KSpaceAcquisition {
        grid: n,
        scheme: SamplingScheme::Radial { spokes_per_frame, start_spoke },
        frames,
    })
}

/// Add i.i.d. circular complex Gaussian noise of standard deviation `sigma`
/// (per complex sample) to every measurement, in place.
pub fn add_acquisition_noise<T: Real>(acq: &mut KSpaceAcquisition<T>, sigma: T, seed: u64) {
    if sigma <= T::zero() {
        return;
    }
    let mut r = rng::seeded(seed);
    let per_component = sigma / real::<T>(std::f64::consts::SQRT_2);
    for frame in &mut acq.frames {
        for coil in &mut frame.samples {
            for z in coil.iter_mut() {
                let re: T = rng::standard_normal(&mut r);
                let im: T = rng::standard_normal(&mut r);
                *z += Complex::new(re, im) * per_component;
            }
        }
    }
}
