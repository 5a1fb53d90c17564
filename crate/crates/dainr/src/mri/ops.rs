//! Complex-arithmetic tape operations shared across the forward model.

use std::rc::Rc;

use num_complex::Complex;

use crate::autodiff::{CustomGrad, Tape, Tensor, Var};
use crate::Real;

/// Convert complex samples to a two-channel `[n, 2]` tensor.
pub fn complex_to_channels<T: Real>(values: &[Complex<T>]) -> Tensor<T> {
    let mut flat = Vec::with_capacity(2 * values.len());
    for z in values {
        flat.push(z.re);
        flat.push(z.im);
    }
    Tensor::from_vec(vec![values.len(), 2], flat)
}

/// Convert a two-channel `[n, 2]` tensor back to complex samples.
pub fn channels_to_complex<T: Real>(tensor: &Tensor<T>) -> Vec<Complex<T>> {
    assert_eq!(tensor.cols(), 2, "expected [n, 2] channels");
    tensor.data().chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}

/// Elementwise multiplication by a fixed complex map (a coil sensitivity).
///
/// The map is constant, so the transpose of the real Jacobian is
/// multiplication by the conjugate map.
struct ComplexMulConst<T> {
    map: Rc<Vec<Complex<T>>>,
}

impl<T: Real> CustomGrad<T> for ComplexMulConst<T> {
    fn name(&self) -> &'static str {
        "complex_mul_const"
    }

    fn backward(
        &self,
        _inputs: &[Tensor<T>],
        grad_out: &Tensor<T>,
        acc: &mut dyn FnMut(usize, Tensor<T>),
    ) {
        let mut din = Vec::with_capacity(grad_out.len());
        for (g, m) in grad_out.data().chunks_exact(2).zip(self.map.iter()) {
            let z = m.conj() * Complex::new(g[0], g[1]);
            din.push(z.re);
            din.push(z.im);
        }
        acc(0, Tensor::from_vec(grad_out.shape().to_vec(), din));
    }
}

/// Record `out = map ⊙ input` for a `[n, 2]` two-channel input.
pub fn complex_mul_const<T: Real>(
    tape: &mut Tape<T>,
    input: Var,
    map: Rc<Vec<Complex<T>>>,
) -> Var {
    let v = tape.value(input);
    assert_eq!(v.cols(), 2, "expected [n, 2] channels");
    assert_eq!(v.rows(), map.len(), "map length must match input rows");
    let mut out = Vec::with_capacity(v.len());
    for (p, m) in v.data().chunks_exact(2).zip(map.iter()) {
        let z = m * Complex::new(p[0], p[1]);
        out.push(z.re);
        out.push(z.im);
    }
    let value = Tensor::from_vec(v.shape().to_vec(), out);
    tape.custom(&[input], value, Rc::new(ComplexMulConst { map }))
}
