//! Image-quality scoring against a reference sequence.
//!
//! The protocol: take magnitudes, normalize each sequence to `[0, 1]` by its
//! *global* min and max (per sequence, not per frame), then score frame by
//! frame — PSNR from the plain MSE, SSIM from [`ssim`]. ROI curves skip
//! normalization entirely: they track the mean raw magnitude inside a mask
//! over time, which is the quantity of interest when no reference exists.

pub mod ssim;

use std::fmt;
use std::io::Write;

use crate::image::ImageSequence;
use crate::{real, scalar, Error, Real, Result};

pub use ssim::ssim;

/// Magnitude frames scaled into `[0, 1]` by the sequence-global range.
pub struct NormalizedSequence<T> {
    size: usize,
    frames: Vec<Vec<T>>,
}

impl<T: Real> NormalizedSequence<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn frame(&self, k: usize) -> &[T] {
        &self.frames[k]
    }
}

/// `(|d| − min) / (max − min)` with min/max taken over every pixel of every
/// frame. A constant sequence has no range to normalize by and is rejected.
pub fn normalize_sequence<T: Real>(d: &ImageSequence<T>) -> Result<NormalizedSequence<T>> {
    let magnitudes = d.magnitudes();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for frame in &magnitudes {
        for &v in frame {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(hi > lo) {
        return Err(Error::ConstantSequence);
    }
    let scale = T::one() / (hi - lo);
    Ok(NormalizedSequence {
        size: d.size(),
        frames: magnitudes
            .into_iter()
            .map(|f| f.into_iter().map(|v| (v - lo) * scale).collect())
            .collect(),
    })
}

/// Peak signal-to-noise ratio, or the sentinel for a zero-error frame where
/// the ratio is unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr<T> {
    Exact,
    Db(T),
}

impl<T: Real> Psnr<T> {
    pub fn db(&self) -> Option<T> {
        match *self {
            Psnr::Exact => None,
            Psnr::Db(v) => Some(v),
        }
    }
}

impl<T: Real> fmt::Display for Psnr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Exact => f.write_str("exact"),
            Psnr::Db(v) => write!(f, "{v}"),
        }
    }
}

/// `10·log10(1/MSE)` between two normalized frames (peak value 1).
pub fn psnr<T: Real>(reference: &[T], test: &[T]) -> Result<Psnr<T>> {
    if reference.len() != test.len() || reference.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "frames of {} and {} pixels",
            reference.len(),
            test.len()
        )));
    }
    let mut mse = T::zero();
    for (&a, &b) in reference.iter().zip(test) {
        let d = a - b;
        mse += d * d;
    }
    mse /= real(reference.len() as f64);
    if mse == T::zero() {
        return Ok(Psnr::Exact);
    }
    Ok(Psnr::Db(-real::<T>(10.0) * mse.log10()))
}

/// Pixelwise `|reference − test|`, the paper-style error map over
/// normalized magnitudes.
pub fn error_map<T: Real>(reference: &[T], test: &[T]) -> Result<Vec<T>> {
    if reference.len() != test.len() {
        return Err(Error::ShapeMismatch(format!(
            "frames of {} and {} pixels",
            reference.len(),
            test.len()
        )));
    }
    Ok(reference.iter().zip(test).map(|(&a, &b)| (a - b).abs()).collect())
}

/// Per-frame mean raw magnitude over the masked pixels.
pub fn roi_curve<T: Real>(d: &ImageSequence<T>, mask: &[bool]) -> Result<Vec<T>> {
    let n = d.size();
    if mask.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "{}-pixel mask on a {n}x{n} image",
            mask.len()
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let norm = T::one() / real::<T>(count as f64);
    Ok(d
        .iter()
        .map(|frame| {
            frame
                .data()
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .fold(T::zero(), |acc, (z, _)| acc + z.norm())
                * norm
        })
        .collect())
}

/// Frame-wise scores of one reconstruction, ready for CSV export.
///
/// PSNR/SSIM are present iff a reference sequence was supplied; ROI curves
/// are always computable since they need no reference.
pub struct MetricReport<T: Real> {
    pub frames: usize,
    pub psnr: Option<Vec<Psnr<T>>>,
    pub ssim: Option<Vec<T>>,
    pub rois: Vec<(String, Vec<T>)>,
}

impl<T: Real> MetricReport<T> {
    /// Score `test` against an optional reference, plus ROI curves of the
    /// test sequence under each named mask.
    pub fn compute(
        reference: Option<&ImageSequence<T>>,
        test: &ImageSequence<T>,
        rois: &[(String, Vec<bool>)],
    ) -> Result<Self> {
        let frames = test.len();
        let (psnr_column, ssim_column) = match reference {
            None => (None, None),
            Some(reference) => {
                if reference.len() != frames || reference.size() != test.size() {
                    return Err(Error::ShapeMismatch(format!(
                        "reference {}x{}² vs test {}x{}²",
                        reference.len(),
                        reference.size(),
                        frames,
                        test.size()
                    )));
                }
                let r = normalize_sequence(reference)?;
                let t = normalize_sequence(test)?;
                let mut psnrs = Vec::with_capacity(frames);
                let mut ssims = Vec::with_capacity(frames);
                for k in 0..frames {
                    psnrs.push(psnr(r.frame(k), t.frame(k))?);
                    ssims.push(ssim(r.frame(k), t.frame(k), test.size())?);
                }
                (Some(psnrs), Some(ssims))
            }
        };
        let rois = rois
            .iter()
            .map(|(name, mask)| Ok((name.clone(), roi_curve(test, mask)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frames, psnr: psnr_column, ssim: ssim_column, rois })
    }

    /// Mean over frames with a finite PSNR; `None` when PSNR was not
    /// computed or every frame was exact.
    pub fn mean_psnr_db(&self) -> Option<f64> {
        let column = self.psnr.as_ref()?;
        let values: Vec<f64> =
            column.iter().filter_map(|p| p.db()).map(scalar::cast::<T, f64>).collect();
        if values.is_empty() {
            return None;
        }
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }

    pub fn mean_ssim(&self) -> Option<f64> {
        let column = self.ssim.as_ref()?;
        Some(column.iter().map(|&s| scalar::cast::<T, f64>(s)).sum::<f64>() / column.len() as f64)
    }

    /// CSV with one row per frame: `frame,psnr_db,ssim[,<roi>...]`, the
    /// reference-based columns omitted entirely in ROI-only mode.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut header = vec!["frame".to_string()];
        if self.psnr.is_some() {
            header.push("psnr_db".into());
            header.push("ssim".into());
        }
        for (name, _) in &self.rois {
            header.push(name.clone());
        }
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.frames {
            let mut row = vec![k.to_string()];
            if let (Some(p), Some(s)) = (&self.psnr, &self.ssim) {
                row.push(p[k].to_string());
                row.push(format!("{}", scalar::cast::<T, f64>(s[k])));
            }
            for (_, curve) in &self.rois {
                row.push(format!("{}", scalar::cast::<T, f64>(curve[k])));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Disc-shaped mask in the phantom's `[-1, 1]²` coordinates — the builder
/// used for synthetic ROIs; hand-drawn masks load from raw files instead.
pub fn disc_mask(size: usize, center: [f64; 2], radius: f64) -> Vec<bool> {
    let half = (size / 2) as f64;
    let mut mask = vec![false; size * size];
    for iy in 0..size {
        let dy = (iy as f64 - half) / half - center[1];
        for ix in 0..size {
            let dx = (ix as f64 - half) / half - center[0];
            mask[iy * size + ix] = dx * dx + dy * dy <= radius * radius;
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex;

    use super::*;
    use crate::baselines::zero_filled_recon;
    use crate::image::ComplexImage;
    use crate::phantom::{
        generate_coil_maps, generate_phantom, retrospective_undersample, DynamicPhantomSpec,
    };
    use crate::rng;

    fn sequence_from_reals(size: usize, frames: Vec<Vec<f64>>) -> ImageSequence<f64> {
        ImageSequence::new(
            frames
                .into_iter()
                .map(|f| {
                    ComplexImage::from_vec(
                        size,
                        f.into_iter().map(|v| Complex::new(v, 0.0)).collect(),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn normalization_maps_the_range_onto_unit() {
        let seq = sequence_from_reals(2, vec![vec![0.0, 2.0, 1.0, 1.0]]);
        let n = normalize_sequence(&seq).unwrap();
        assert_eq!(n.frame(0), &[0.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn normalization_is_sequence_global() {
        let seq = sequence_from_reals(
            2,
            vec![vec![0.0, 2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        );
        let n = normalize_sequence(&seq).unwrap();
        assert_eq!(n.frame(0)[1], 1.0);
        // The second frame's local maximum sits below the global one.
        assert_eq!(n.frame(1)[1], 0.5);
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut r = rng::seeded(1);
        let seq = sequence_from_reals(
            4,
            (0..3).map(|_| (0..16).map(|_| rng::unit(&mut r)).collect()).collect(),
        );
        let once = normalize_sequence(&seq).unwrap();
        let again = normalize_sequence(&sequence_from_reals(
            4,
            (0..3).map(|k| once.frame(k).to_vec()).collect(),
        ))
        .unwrap();
        for k in 0..3 {
            for (a, b) in once.frame(k).iter().zip(again.frame(k)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_sequence_is_rejected() {
        let seq = sequence_from_reals(2, vec![vec![0.7; 4], vec![0.7; 4]]);
        assert!(matches!(normalize_sequence(&seq), Err(Error::ConstantSequence)));
    }

    #[test]
    fn psnr_formula_spot_checks() {
        let zeros = vec![0.0f64; 100];
        assert_eq!(psnr(&zeros, &zeros).unwrap(), Psnr::Exact);
        // MSE 0.01 -> 20 dB, MSE 1 -> 0 dB.
        let tenth = vec![0.1f64; 100];
        assert_relative_eq!(psnr(&zeros, &tenth).unwrap().db().unwrap(), 20.0, epsilon = 1e-12);
        let ones = vec![1.0f64; 100];
        assert_abs_diff_eq!(psnr(&zeros, &ones).unwrap().db().unwrap(), 0.0, epsilon = 1e-12);
        assert!(psnr(&zeros, &ones[..50]).is_err());
        assert_eq!(Psnr::<f64>::Exact.to_string(), "exact");
    }

    #[test]
    fn psnr_strictly_decreases_with_noise_level() {
        let mut r = rng::seeded(2);
        let reference: Vec<f64> = (0..400).map(|_| 0.3 + 0.4 * rng::unit(&mut r)).collect();
        let mut last = f64::INFINITY;
        for sigma in [0.005, 0.01, 0.02, 0.05, 0.1] {
            let noisy: Vec<f64> = reference
                .iter()
                .map(|v| v + sigma * crate::rng::standard_normal::<f64>(&mut r))
                .collect();
            let db = psnr(&reference, &noisy).unwrap().db().unwrap();
            assert!(db < last, "psnr did not drop at sigma {sigma}: {db} vs {last}");
            last = db;
        }
    }

    #[test]
    fn error_map_is_the_absolute_difference() {
        let a = vec![0.2f64, 0.8, 0.5];
        let b = vec![0.5f64, 0.3, 0.5];
        let m = error_map(&a, &b).unwrap();
        assert_relative_eq!(m[0], 0.3);
        assert_relative_eq!(m[1], 0.5);
        assert_relative_eq!(m[2], 0.0);
    }

    #[test]
    fn roi_curve_of_a_constant_image_is_constant() {
        let seq = sequence_from_reals(4, vec![vec![0.4; 16], vec![0.4; 16]]);
        let mut mask = vec![false; 16];
        mask[5] = true;
        mask[6] = true;
        let curve = roi_curve(&seq, &mask).unwrap();
        assert_eq!(curve.len(), 2);
        for v in curve {
            assert_relative_eq!(v, 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn roi_curve_ignores_pixels_outside_the_mask() {
        let mut inside = vec![0.0f64; 16];
        inside[5] = 1.0;
        let mut altered = inside.clone();
        altered[0] = 99.0;
        let mut mask = vec![false; 16];
        mask[5] = true;
        let a = roi_curve(&sequence_from_reals(4, vec![inside]), &mask).unwrap();
        let b = roi_curve(&sequence_from_reals(4, vec![altered]), &mask).unwrap();
        assert_eq!(a, b);

        assert!(matches!(
            roi_curve(&sequence_from_reals(4, vec![vec![0.0; 16]]), &vec![false; 16]),
            Err(Error::EmptyMask)
        ));
        assert!(roi_curve(&sequence_from_reals(4, vec![vec![0.0; 16]]), &[true; 9]).is_err());
    }

    #[test]
    fn uptake_roi_follows_the_programmed_ramp() {
        let (n, tau) = (64usize, 10usize);
        let gt = generate_phantom(&DynamicPhantomSpec::<f64>::uptake(n, tau)).unwrap();
        // Interior of the phantom's fast-enhancing disc at (-0.30, 0.30),
        // radius 0.08 — stay at 0.05 so boundary pixels don't dilute it.
        let mask = disc_mask(n, [-0.30, 0.30], 0.05);
        let curve = roi_curve(&gt, &mask).unwrap();

        let torso = Complex::new(0.30, 0.02);
        let base = Complex::new(0.10, 0.0);
        let enhancing = Complex::new(0.55, 0.06);
        for (k, &measured) in curve.iter().enumerate() {
            let t = k as f64;
            let gain =
                ((t - 0.12 * tau as f64) / (0.18 * tau as f64)).clamp(0.0, 1.0);
            let expected = (torso + base + enhancing * gain).norm();
            assert_relative_eq!(measured, expected, max_relative = 0.10);
        }
        // The ramp actually rises and then plateaus.
        assert!(curve[tau - 1] > curve[0] * 1.5);
        assert_relative_eq!(curve[tau - 1], curve[tau - 2], max_relative = 1e-6);
    }

    #[test]
    fn zero_filled_roi_curve_tracks_the_ground_truth() {
        let (n, tau) = (64usize, 8usize);
        let gt = generate_phantom(&DynamicPhantomSpec::<f64>::uptake(n, tau)).unwrap();
        let maps = generate_coil_maps(4, n, 3);
        let acq = retrospective_undersample(&gt, &maps, 8, 0).unwrap();
        let zf = zero_filled_recon(&acq, Some(&maps)).unwrap();

        let mask = disc_mask(n, [-0.30, 0.30], 0.05);
        let reference = roi_curve(&gt, &mask).unwrap();
        let measured = roi_curve(&zf, &mask).unwrap();

        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mr, mm) = (mean(&reference), mean(&measured));
        let mut num = 0.0;
        let (mut dr, mut dm) = (0.0, 0.0);
        for (r, m) in reference.iter().zip(&measured) {
            num += (r - mr) * (m - mm);
            dr += (r - mr) * (r - mr);
            dm += (m - mm) * (m - mm);
        }
        let correlation = num / (dr * dm).sqrt();
        assert!(correlation > 0.9, "curve correlation {correlation}");
    }

    #[test]
    fn report_of_an_exact_copy_is_all_ones() {
        let gt = generate_phantom(&DynamicPhantomSpec::<f64>::beating(16, 3)).unwrap();
        let report = MetricReport::compute(Some(&gt), &gt, &[]).unwrap();
        assert!(report.psnr.unwrap().iter().all(|p| *p == Psnr::Exact));
        for s in report.ssim.unwrap() {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn csv_includes_reference_columns_only_with_a_reference() {
        let gt = generate_phantom(&DynamicPhantomSpec::<f64>::beating(16, 2)).unwrap();
        let mask = disc_mask(16, [0.0, 0.0], 0.4);
        let rois = vec![("core".to_string(), mask)];

        let full = MetricReport::compute(Some(&gt), &gt, &rois).unwrap();
        let mut buf = Vec::new();
        full.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("frame,psnr_db,ssim,core\n"));
        assert!(text.contains("0,exact,1"));

        let roi_only = MetricReport::compute(None, &gt, &rois).unwrap();
        assert!(roi_only.psnr.is_none());
        assert!(roi_only.mean_psnr_db().is_none());
        let mut buf = Vec::new();
        roi_only.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("frame,core\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn report_means_skip_exact_frames() {
        let report = MetricReport::<f64> {
            frames: 2,
            psnr: Some(vec![Psnr::Exact, Psnr::Db(30.0)]),
            ssim: Some(vec![1.0, 0.5]),
            rois: vec![],
        };
        assert_relative_eq!(report.mean_psnr_db().unwrap(), 30.0);
        assert_relative_eq!(report.mean_ssim().unwrap(), 0.75);
        let all_exact =
            MetricReport::<f64> { frames: 1, psnr: Some(vec![Psnr::Exact]), ssim: Some(vec![1.0]), rois: vec![] };
        assert!(all_exact.mean_psnr_db().is_none());
    }
}
