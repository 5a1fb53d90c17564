//! Complex-valued images and image sequences.

use num_complex::Complex;

use crate::{Error, Real, Result};

/// Square complex image, row-major with `index = iy * size + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage<T> {
    size: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexImage<T> {
    pub fn zeros(size: usize) -> Self {
        Self { size, data: vec![Complex::new(T::zero(), T::zero()); size * size] }
    }

    pub fn from_vec(size: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), size * size, "expected {0}x{0} pixels", size);
        Self { size, data }
    }

    /// Side length in pixels.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex<T> {
        self.data[iy * self.size + ix]
    }

    pub fn at_mut(&mut self, ix: usize, iy: usize) -> &mut Complex<T> {
        &mut self.data[iy * self.size + ix]
    }

    /// Per-pixel modulus.
    pub fn magnitude(&self) -> Vec<T> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    /// Interleaved `(re, im)` pairs, row-major.
    pub fn to_interleaved(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.data.len());
        for z in &self.data {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    pub fn from_interleaved(size: usize, flat: &[T]) -> Result<Self> {
        if flat.len() != 2 * size * size {
            return Err(Error::ShapeMismatch(format!(
                "{} interleaved values cannot form a {size}x{size} complex image",
                flat.len()
            )));
        }
        let data = flat.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
        Ok(Self { size, data })
    }

    pub fn cast<U: Real>(&self) -> ComplexImage<U> {
        ComplexImage {
            size: self.size,
            data: self
                .data
                .iter()
                .map(|z| {
                    Complex::new(
                        crate::real(z.re.to_f64().unwrap()),
                        crate::real(z.im.to_f64().unwrap()),
                    )
                })
                .collect(),
        }
    }
}

/// Time-ordered frames of equal size.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSequence<T> {
    frames: Vec<ComplexImage<T>>,
}

impl<T: Real> ImageSequence<T> {
    pub fn new(frames: Vec<ComplexImage<T>>) -> Self {
        assert!(!frames.is_empty(), "sequence needs at least one frame");
        let size = frames[0].size();
        assert!(frames.iter().all(|f| f.size() == size), "frame sizes differ");
        Self { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn size(&self) -> usize {
        self.frames[0].size()
    }

    pub fn frames(&self) -> &[ComplexImage<T>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &ComplexImage<T> {
        &self.frames[k]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ComplexImage<T>> {
        self.frames.iter()
    }

    pub fn magnitudes(&self) -> Vec<Vec<T>> {
        self.frames.iter().map(|f| f.magnitude()).collect()
    }

    pub fn cast<U: Real>(&self) -> ImageSequence<U> {
        ImageSequence { frames: self.frames.iter().map(|f| f.cast()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaved_round_trip() {
        let img = ComplexImage::from_vec(
            2,
            vec![
                Complex::new(1.0_f64, 2.0),
                Complex::new(-3.0, 4.0),
                Complex::new(0.0, 0.5),
                Complex::new(7.0, -8.0),
            ],
        );
        let flat = img.to_interleaved();
        assert_eq!(flat, vec![1.0, 2.0, -3.0, 4.0, 0.0, 0.5, 7.0, -8.0]);
        assert_eq!(ComplexImage::from_interleaved(2, &flat).unwrap(), img);
    }

    #[test]
    fn interleaved_length_checked() {
        assert!(matches!(
            ComplexImage::<f64>::from_interleaved(2, &[1.0; 7]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn indexing_is_row_major() {
        let mut img = ComplexImage::<f64>::zeros(3);
        *img.at_mut(2, 1) = Complex::new(5.0, 0.0);
        assert_eq!(img.data()[1 * 3 + 2].re, 5.0);
        assert_eq!(img.at(2, 1).re, 5.0);
    }

    #[test]
    #[should_panic(expected = "frame sizes differ")]
    fn mixed_frame_sizes_panic() {
        let _ = ImageSequence::new(vec![ComplexImage::<f64>::zeros(2), ComplexImage::zeros(3)]);
    }
}
