//! Define-by-run reverse-mode tape.
//!
//! The tape is rebuilt for every optimization step: operations record their
//! inputs and output value as they execute, and [`Tape::backward`] replays the
//! records in reverse to accumulate cotangents. Gradient accumulation is
//! additive, so a value feeding several consumers receives the sum of their
//! contributions.

use std::rc::Rc;

use super::Tensor;
use crate::{Error, Real, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Backward rule for an operation the tape does not know natively
/// (table gathers, non-uniform Fourier operators, ...).
pub trait CustomGrad<T: Real> {
    fn name(&self) -> &'static str;

    /// Accumulate input cotangents. `inputs` holds the recorded input values
    /// in registration order; call `acc(i, g)` to add `g` to input `i`'s
    /// gradient.
    fn backward(
        &self,
        inputs: &[Tensor<T>],
        grad_out: &Tensor<T>,
        acc: &mut dyn FnMut(usize, Tensor<T>),
    );
}

enum Op<T: Real> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Neg(Var),
    Scale(Var, T),
    /// `[m,k] x [k,n] -> [m,n]`
    MatMul(Var, Var),
    /// `[m,n] + [n]` broadcast over rows.
    AddRow(Var, Var),
    Relu(Var),
    Sin(Var),
    Cos(Var),
    /// `|x|` with subgradient 0 at the origin.
    Abs(Var),
    /// Row-wise complex modulus: `[p,2] -> [p,1]`, subgradient 0 at 0.
    ComplexAbs(Var),
    /// Full reduction to a `[1]` scalar.
    Sum(Var),
    /// Column-wise concatenation of rank-2 tensors with equal row counts.
    Concat(Vec<Var>),
    Custom(Vec<Var>, Rc<dyn CustomGrad<T>>),
}

struct Node<T: Real> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Ordered record of operations with their backward rules.
pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Record a value that does not require gradients.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Record a trainable parameter.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = zip(self.value(a), self.value(b), |x, y| x + y);
        self.push(value, Op::Add(a, b), self.needs(a) || self.needs(b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = zip(self.value(a), self.value(b), |x, y| x - y);
        self.push(value, Op::Sub(a, b), self.needs(a) || self.needs(b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = zip(self.value(a), self.value(b), |x, y| x * y);
        self.push(value, Op::Mul(a, b), self.needs(a) || self.needs(b))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| -x);
        self.push(value, Op::Neg(a), self.needs(a))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let value = self.value(a).map(|x| x * c);
        self.push(value, Op::Scale(a, c), self.needs(a))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        let (m, k) = (va.rows(), va.cols());
        let (kb, n) = (vb.rows(), vb.cols());
        assert_eq!(k, kb, "matmul inner dims {k} vs {kb}");
        let mut out = vec![T::zero(); m * n];
        matmul_acc(va.data(), vb.data(), m, k, n, &mut out);
        let value = Tensor::from_vec(vec![m, n], out);
        self.push(value, Op::MatMul(a, b), self.needs(a) || self.needs(b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (va, vr) = (self.value(a), self.value(row));
        let n = va.cols();
        assert_eq!(vr.len(), n, "bias length {} vs {} columns", vr.len(), n);
        let mut out = va.data().to_vec();
        for chunk in out.chunks_mut(n) {
            for (o, &b) in chunk.iter_mut().zip(vr.data()) {
                *o += b;
            }
        }
        let value = Tensor::from_vec(va.shape().to_vec(), out);
        self.push(value, Op::AddRow(a, row), self.needs(a) || self.needs(row))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| if x > T::zero() { x } else { T::zero() });
        self.push(value, Op::Relu(a), self.needs(a))
    }

    pub fn sin(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.sin());
        self.push(value, Op::Sin(a), self.needs(a))
    }

    pub fn cos(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.cos());
        self.push(value, Op::Cos(a), self.needs(a))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.abs());
        self.push(value, Op::Abs(a), self.needs(a))
    }

    pub fn complex_abs(&mut self, a: Var) -> Var {
        let va = self.value(a);
        assert_eq!(va.cols(), 2, "complex_abs expects [p,2]");
        let p = va.rows();
        let data = va
            .data()
            .chunks_exact(2)
            .map(|z| (z[0] * z[0] + z[1] * z[1]).sqrt())
            .collect();
        let value = Tensor::from_vec(vec![p, 1], data);
        self.push(value, Op::ComplexAbs(a), self.needs(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let mut acc = T::zero();
        for &x in self.value(a).data() {
            acc += x;
        }
        self.push(Tensor::scalar(acc), Op::Sum(a), self.needs(a))
    }

    /// Concatenate rank-2 tensors along the column axis.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let m = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = vec![T::zero(); m * total];
        let mut offset = 0;
        for &p in parts {
            let vp = self.value(p);
            assert_eq!(vp.rows(), m, "concat row mismatch");
            let n = vp.cols();
            for (r, src) in vp.data().chunks_exact(n).enumerate() {
                out[r * total + offset..r * total + offset + n].copy_from_slice(src);
            }
            offset += n;
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        let value = Tensor::from_vec(vec![m, total], out);
        self.push(value, Op::Concat(parts.to_vec()), needs)
    }

    /// Record an externally computed operation together with its backward rule.
    pub fn custom(
        &mut self,
        inputs: &[Var],
        value: Tensor<T>,
        rule: Rc<dyn CustomGrad<T>>,
    ) -> Var {
        let needs = inputs.iter().any(|&p| self.needs(p));
        self.push(value, Op::Custom(inputs.to_vec(), rule), needs)
    }

    /// Reverse sweep. Populates the gradient of every reachable
    /// gradient-requiring value; untouched values read back as zero.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyTape);
        }
        let lv = &self.nodes[loss.0].value;
        if lv.len() != 1 {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(T::one()));

        for id in (0..=loss.0).rev() {
            if !self.nodes[id].needs_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.backprop_node(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, id: usize, g: &Tensor<T>, grads: &mut Vec<Option<Tensor<T>>>) {
        let node = &self.nodes[id];
        let acc = |v: Var, contribution: Tensor<T>, grads: &mut Vec<Option<Tensor<T>>>| {
            if !self.needs(v) {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&contribution),
                slot @ None => *slot = Some(contribution),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(*a, g.clone(), grads);
                acc(*b, g.clone(), grads);
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone(), grads);
                acc(*b, g.map(|x| -x), grads);
            }
            Op::Mul(a, b) => {
                acc(*a, zip(g, self.value(*b), |gx, y| gx * y), grads);
                acc(*b, zip(g, self.value(*a), |gx, x| gx * x), grads);
            }
            Op::Neg(a) => acc(*a, g.map(|x| -x), grads),
            Op::Scale(a, c) => {
                let c = *c;
                acc(*a, g.map(|x| x * c), grads);
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                if self.needs(*a) {
                    // dA = g · Bᵀ
                    let mut da = vec![T::zero(); m * k];
                    matmul_bt_acc(g.data(), vb.data(), m, n, k, &mut da);
                    acc(*a, Tensor::from_vec(vec![m, k], da), grads);
                }
                if self.needs(*b) {
                    // dB = Aᵀ · g
                    let mut db = vec![T::zero(); k * n];
                    matmul_at_acc(va.data(), g.data(), m, k, n, &mut db);
                    acc(*b, Tensor::from_vec(vec![k, n], db), grads);
                }
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone(), grads);
                if self.needs(*row) {
                    let n = self.value(*row).len();
                    let mut sums = vec![T::zero(); n];
                    for chunk in g.data().chunks_exact(n) {
                        for (s, &x) in sums.iter_mut().zip(chunk) {
                            *s += x;
                        }
                    }
                    acc(*row, Tensor::from_vec(vec![n], sums), grads);
                }
            }
            Op::Relu(a) => {
                acc(*a, zip(g, self.value(*a), |gx, x| if x > T::zero() { gx } else { T::zero() }), grads);
            }
            Op::Sin(a) => acc(*a, zip(g, self.value(*a), |gx, x| gx * x.cos()), grads),
            Op::Cos(a) => acc(*a, zip(g, self.value(*a), |gx, x| -gx * x.sin()), grads),
            Op::Abs(a) => {
                acc(
                    *a,
                    zip(g, self.value(*a), |gx, x| {
                        if x > T::zero() {
                            gx
                        } else if x < T::zero() {
                            -gx
                        } else {
                            T::zero()
                        }
                    }),
                    grads,
                );
            }
            Op::ComplexAbs(a) => {
                let va = self.value(*a);
                let out = &node.value;
                let mut da = vec![T::zero(); va.len()];
                for (i, (z, &r)) in va.data().chunks_exact(2).zip(out.data()).enumerate() {
                    if r > T::zero() {
                        let gi = g.data()[i];
                        da[2 * i] = gi * z[0] / r;
                        da[2 * i + 1] = gi * z[1] / r;
                    }
                }
                acc(*a, Tensor::from_vec(va.shape().to_vec(), da), grads);
            }
            Op::Sum(a) => {
                let va = self.value(*a);
                acc(*a, Tensor::full(va.shape().to_vec(), g.item()), grads);
            }
            Op::Concat(parts) => {
                let total = node.value.cols();
                let m = node.value.rows();
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).cols();
                    if self.needs(p) {
                        let mut dp = vec![T::zero(); m * n];
                        for r in 0..m {
                            dp[r * n..(r + 1) * n]
                                .copy_from_slice(&g.data()[r * total + offset..r * total + offset + n]);
                        }
                        acc(p, Tensor::from_vec(vec![m, n], dp), grads);
                    }
                    offset += n;
                }
            }
            Op::Custom(inputs, rule) => {
                let values: Vec<Tensor<T>> = inputs.iter().map(|&v| self.value(v).clone()).collect();
                let mut sink = |i: usize, contribution: Tensor<T>| {
                    acc(inputs[i], contribution, grads);
                };
                rule.backward(&values, g, &mut sink);
            }
        }
    }
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<T: Real> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, or zeros shaped like `like` when `v` was unreachable.
    pub fn of(&self, v: Var, like: &Tensor<T>) -> Tensor<T> {
        match self.get(v) {
            Some(g) => g.clone(),
            None => Tensor::zeros(like.shape().to_vec()),
        }
    }
}

fn zip<T: Real>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    assert_eq!(a.shape(), b.shape(), "elementwise shape mismatch");
    Tensor::from_vec(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
}

/// `out += a[m,k] · b[k,n]`, row-major.
pub(crate) fn matmul_acc<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &aip) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bpj) in orow.iter_mut().zip(brow) {
                *o += aip * bpj;
            }
        }
    }
}

/// `out += g[m,n] · bᵀ` where `b` is `[k,n]`, giving `[m,k]`.
fn matmul_bt_acc<T: Real>(g: &[T], b: &[T], m: usize, n: usize, k: usize, out: &mut [T]) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        let orow = &mut out[i * k..(i + 1) * k];
        for (p, o) in orow.iter_mut().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            let mut dot = T::zero();
            for (&gx, &bx) in grow.iter().zip(brow) {
                dot += gx * bx;
            }
            *o += dot;
        }
    }
}

/// `out += aᵀ · g` where `a` is `[m,k]` and `g` is `[m,n]`, giving `[k,n]`.
fn matmul_at_acc<T: Real>(a: &[T], g: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let grow = &g[i * n..(i + 1) * n];
        for (p, &aip) in arow.iter().enumerate() {
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &gx) in orow.iter_mut().zip(grow) {
                *o += aip * gx;
            }
        }
    }
}
