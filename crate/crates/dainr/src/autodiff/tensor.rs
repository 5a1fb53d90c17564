use std::sync::Arc;

use crate::{real, Real};

/// Dense row-major array of real scalars.
///
/// Storage is behind an `Arc` so recording a tensor on a [`Tape`](super::Tape)
/// is O(1); mutation goes through [`Tensor::data_mut`], which only copies when
/// the buffer is shared.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Arc<Vec<T>>,
}

impl<T: Real> Tensor<T> {
    pub fn from_vec(shape: impl Into<Vec<usize>>, data: Vec<T>) -> Self {
        let shape = shape.into();
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match {} elements",
            shape,
            data.len()
        );
        Self { shape, data: Arc::new(data) }
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self { shape, data: Arc::new(vec![T::zero(); n]) }
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: T) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Self { shape, data: Arc::new(vec![value; n]) }
    }

    /// A scalar tensor of shape `[1]`.
    pub fn scalar(value: T) -> Self {
        Self::from_vec(vec![1], vec![value])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row count of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() on rank-{} tensor", self.shape.len());
        self.shape[0]
    }

    /// Column count of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() on rank-{} tensor", self.shape.len());
        self.shape[1]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        Arc::<Vec<T>>::make_mut(&mut self.data)
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.len(), 1, "item() on tensor of {} elements", self.len());
        self.data[0]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: Arc::new(self.data.iter().map(|&x| f(x)).collect()),
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Element-wise cast between scalar types.
    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor::from_vec(
            self.shape.clone(),
            self.data.iter().map(|&x| real::<U>(x.to_f64().unwrap())).collect(),
        )
    }

    /// In-place `self += other` (shapes must match).
    pub fn add_assign(&mut self, other: &Tensor<T>) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        let dst = self.data_mut();
        for (d, s) in dst.iter_mut().zip(other.data.iter()) {
            *d += *s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_len_agree() {
        let t = Tensor::<f64>::zeros(vec![3, 4]);
        assert_eq!(t.shape(), &[3, 4]);
        assert_eq!(t.len(), 12);
    }

    #[test]
    #[should_panic(expected = "does not match")]
    fn mismatched_shape_panics() {
        let _ = Tensor::from_vec(vec![2, 2], vec![1.0_f64; 3]);
    }

    #[test]
    fn data_mut_does_not_leak_into_clones() {
        let a = Tensor::from_vec(vec![2], vec![1.0_f64, 2.0]);
        let mut b = a.clone();
        b.data_mut()[0] = 9.0;
        assert_eq!(a.data()[0], 1.0);
        assert_eq!(b.data()[0], 9.0);
    }
}
