//! Synthetic receive-coil sensitivities.

use num_complex::Complex;

use crate::image::ComplexImage;
use crate::{real, Real};

/// Smooth sensitivity maps for `n_coils` receivers arranged on a ring.
///
/// Each coil is a Gaussian lobe centered outside the object with a gentle
/// linear phase ramp; the maps are normalized so their pointwise
/// sum-of-squares is one, which makes a conjugate-weighted coil combination
/// directly comparable to the underlying image. The first coil carries no
/// phase (a real-valued reference), so a single-coil setup degenerates to
/// the identity map.
pub fn birdcage_coil_maps<T: Real>(n_coils: usize, size: usize) -> Vec<ComplexImage<T>> {
    assert!(n_coils > 0, "at least one coil");
    if n_coils == 1 {
        return vec![ComplexImage::from_vec(
            size,
            vec![Complex::new(T::one(), T::zero()); size * size],
        )];
    }

    let centers: Vec<(f64, f64)> = (0..n_coils)
        .map(|c| {
            let phi = std::f64::consts::TAU * c as f64 / n_coils as f64;
            (1.1 * phi.cos(), 1.1 * phi.sin())
        })
        .collect();
    let sigma_sq = 2.0 * 0.9 * 0.9;

    let mut maps: Vec<Vec<Complex<f64>>> = vec![Vec::with_capacity(size * size); n_coils];
    for iy in 0..size {
        let y = pixel_coord(iy, size);
        for ix in 0..size {
            let x = pixel_coord(ix, size);
            let mut rss = 0.0;
            let mut row = Vec::with_capacity(n_coils);
            for (c, &(cx, cy)) in centers.iter().enumerate() {
                let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                let magnitude = (-d2 / sigma_sq).exp();
                let phase = if c == 0 {
                    0.0
                } else {
                    0.4 * std::f64::consts::PI * (x * cy - y * cx) + 0.5 * c as f64
                };
                let v = Complex::from_polar(magnitude, phase);
                rss += v.norm_sqr();
                row.push(v);
            }
            let norm = rss.sqrt();
            for (c, v) in row.into_iter().enumerate() {
                maps[c].push(v / norm);
            }
        }
    }

    maps.into_iter()
        .map(|m| {
            ComplexImage::from_vec(
                size,
                m.into_iter().map(|z| Complex::new(real(z.re), real(z.im))).collect(),
            )
        })
        .collect()
}

/// Conjugate-weighted combination of per-coil images:
/// `m(x) = Σ_c conj(S_c(x)) · m_c(x)`.
pub fn combine_coil_images<T: Real>(
    coil_images: &[ComplexImage<T>],
    maps: &[ComplexImage<T>],
) -> ComplexImage<T> {
    assert_eq!(coil_images.len(), maps.len(), "one map per coil image");
    let size = coil_images[0].size();
    let mut out = ComplexImage::zeros(size);
    for (img, map) in coil_images.iter().zip(maps) {
        assert_eq!(img.size(), size);
        for ((o, &v), &s) in out.data_mut().iter_mut().zip(img.data()).zip(map.data()) {
            *o += s.conj() * v;
        }
    }
    out
}

/// Normalized pixel-center coordinate in `[-1, 1)`.
fn pixel_coord(i: usize, size: usize) -> f64 {
    2.0 * (i as f64 - (size / 2) as f64) / size as f64
}
