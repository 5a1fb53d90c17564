//! Sequence regularizers: temporal total variation and the nuclear norm.
//!
//! Both come in two forms — a plain evaluation on an [`ImageSequence`] for
//! reporting, and a tape operation for use inside an objective. The nuclear
//! norm is computed by a one-sided Jacobi SVD of the Casorati matrix
//! (pixels × frames), which also yields the standard subgradient `U·Vᴴ`
//! used for backpropagation.

use std::rc::Rc;

use num_complex::Complex;

use crate::autodiff::{CustomGrad, Tape, Tensor, Var};
use crate::image::ImageSequence;
use crate::{real, Error, Real, Result};

/// Weights of the optional penalty terms in the single-network baseline
/// objective. Both default to zero, which reduces the objective to pure
/// data consistency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizerWeights<T> {
    pub temporal: T,
    pub low_rank: T,
}

impl<T: Real> Default for RegularizerWeights<T> {
    fn default() -> Self {
        Self { temporal: T::zero(), low_rank: T::zero() }
    }
}

/// Temporal total variation: Σ_t Σ_pixels |d_{t+1} − d_t|, with the complex
/// modulus of each difference.
pub fn temporal_tv<T: Real>(d: &ImageSequence<T>) -> Result<T> {
    if d.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "temporal TV needs at least two frames, got {}",
            d.len()
        )));
    }
    let mut acc = T::zero();
    for t in 0..d.len() - 1 {
        for (a, b) in d.frame(t + 1).data().iter().zip(d.frame(t).data()) {
            acc += (a - b).norm();
        }
    }
    Ok(acc)
}

/// The same penalty over two-channel `[p, 2]` frame variables on the tape.
pub fn temporal_tv_op<T: Real>(tape: &mut Tape<T>, frames: &[Var]) -> Result<Var> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "temporal TV needs at least two frames, got {}",
            frames.len()
        )));
    }
    let mut total: Option<Var> = None;
    for pair in frames.windows(2) {
        let diff = tape.sub(pair[1], pair[0]);
        let abs = tape.complex_abs(diff);
        let s = tape.sum(abs);
        total = Some(match total {
            Some(t) => tape.add(t, s),
            None => s,
        });
    }
    Ok(total.expect("at least one frame pair"))
}

/// Nuclear norm of the Casorati matrix (N² rows, one column per frame):
/// the sum of its singular values.
pub fn nuclear_norm<T: Real>(d: &ImageSequence<T>) -> Result<T> {
    let columns: Vec<Vec<Complex<T>>> = d.iter().map(|f| f.data().to_vec()).collect();
    let svd = jacobi_svd(columns)?;
    Ok(svd.sigma.iter().fold(T::zero(), |a, &s| a + s))
}

/// Nuclear norm over two-channel frame variables. The SVD runs once at
/// recording time; the backward pass reuses it to emit the `U·Vᴴ`
/// subgradient.
pub fn nuclear_norm_op<T: Real>(tape: &mut Tape<T>, frames: &[Var]) -> Result<Var> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("nuclear norm of an empty sequence".into()));
    }
    let rows = tape.value(frames[0]).rows();
    let columns: Vec<Vec<Complex<T>>> = frames
        .iter()
        .map(|&f| {
            let v = tape.value(f);
            assert_eq!(v.cols(), 2, "nuclear_norm_op expects [p,2] frames");
            assert_eq!(v.rows(), rows, "frames must share a pixel count");
            v.data().chunks_exact(2).map(|z| Complex::new(z[0], z[1])).collect()
        })
        .collect();
    let svd = jacobi_svd(columns)?;
    let value = svd.sigma.iter().fold(T::zero(), |a, &s| a + s);
    Ok(tape.custom(frames, Tensor::scalar(value), Rc::new(NuclearNormOp { rows, svd })))
}

struct NuclearNormOp<T: Real> {
    rows: usize,
    svd: Svd<T>,
}

impl<T: Real> CustomGrad<T> for NuclearNormOp<T> {
    fn name(&self) -> &'static str {
        "nuclear_norm"
    }

    fn backward(
        &self,
        inputs: &[Tensor<T>],
        grad_out: &Tensor<T>,
        acc: &mut dyn FnMut(usize, Tensor<T>),
    ) {
        let go = grad_out.item();
        // Subgradient of Σσ is U·Vᴴ; column t of it is the gradient of the
        // t-th frame, split back into (re, im) channels.
        for (t, _) in inputs.iter().enumerate() {
            let mut g = vec![T::zero(); self.rows * 2];
            for (j, sigma) in self.svd.sigma.iter().enumerate() {
                if *sigma <= T::zero() {
                    continue;
                }
                let vjt_conj = self.svd.v[j][t].conj();
                for (i, &uji) in self.svd.u[j].iter().enumerate() {
                    let z = uji * vjt_conj;
                    g[i * 2] += go * z.re;
                    g[i * 2 + 1] += go * z.im;
                }
            }
            acc(t, Tensor::from_vec(vec![self.rows, 2], g));
        }
    }
}

/// Thin SVD of a tall matrix given by columns: `A = U Σ Vᴴ` with unit
/// columns in `u` and `v`, `sigma` sorted descending.
pub(crate) struct Svd<T: Real> {
    pub u: Vec<Vec<Complex<T>>>,
    pub sigma: Vec<T>,
    pub v: Vec<Vec<Complex<T>>>,
}

const MAX_SWEEPS: usize = 64;

/// One-sided Jacobi: repeatedly apply 2×2 unitary rotations on column pairs
/// until all columns are mutually orthogonal; the column norms are then the
/// singular values and the accumulated rotations form V.
pub(crate) fn jacobi_svd<T: Real>(mut a: Vec<Vec<Complex<T>>>) -> Result<Svd<T>> {
    let n = a.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut v: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| {
            let mut col = vec![zero; n];
            col[j] = Complex::new(T::one(), T::zero());
            col
        })
        .collect();
    let tol = T::epsilon() * real::<T>(16.0);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (alpha, beta, gamma) = gram2(&a[p], &a[q]);
                let denom = (alpha * beta).sqrt();
                if denom == T::zero() || gamma.norm() <= denom * tol {
                    continue;
                }
                off = off.max(gamma.norm() / denom);
                // Diagonalize the 2×2 Gram block [[α, γ], [γ̄, β]]: strip the
                // phase of γ, then a real Jacobi rotation.
                let g = gamma.norm();
                let phase = gamma / g;
                let tau = (beta - alpha) / (g + g);
                let t = {
                    let root = (T::one() + tau * tau).sqrt();
                    if tau >= T::zero() { (tau + root).recip() } else { (tau - root).recip() }
                };
                let cs = (T::one() + t * t).sqrt().recip();
                let sn = cs * t;
                let phase_conj = phase.conj();
                rotate_pair(&mut a, p, q, cs, sn, phase_conj);
                rotate_pair(&mut v, p, q, cs, sn, phase_conj);
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<T> = a.iter().map(|c| column_norm(c)).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite singular values"));

    let mut u = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v_sorted = Vec::with_capacity(n);
    for &j in &order {
        let s = norms[j];
        sigma.push(s);
        if s > T::zero() {
            u.push(a[j].iter().map(|z| z / s).collect());
        } else {
            u.push(vec![zero; a[j].len()]);
        }
        v_sorted.push(v[j].clone());
    }
    Ok(Svd { u, sigma, v: v_sorted })
}

/// `(‖a_p‖², ‖a_q‖², ⟨a_p, a_q⟩)` of two columns.
fn gram2<T: Real>(
    cp: &[Complex<T>],
    cq: &[Complex<T>],
) -> (T, T, Complex<T>) {
    let mut alpha = T::zero();
    let mut beta = T::zero();
    let mut gamma = Complex::new(T::zero(), T::zero());
    for (x, y) in cp.iter().zip(cq) {
        alpha += x.norm_sqr();
        beta += y.norm_sqr();
        gamma += x.conj() * y;
    }
    (alpha, beta, gamma)
}

/// Right-multiply columns `p`, `q` by the unitary
/// `[[cs, sn], [−sn·p̄, cs·p̄]]` (with `p̄` the conjugated phase of the Gram
/// off-diagonal), the 2×2 rotation that orthogonalizes them.
fn rotate_pair<T: Real>(
    cols: &mut [Vec<Complex<T>>],
    p: usize,
    q: usize,
    cs: T,
    sn: T,
    phase_conj: Complex<T>,
) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let rotated = *y * phase_conj;
        let new_x = *x * cs - rotated * sn;
        let new_y = *x * sn + rotated * cs;
        *x = new_x;
        *y = new_y;
    }
}

fn column_norm<T: Real>(c: &[Complex<T>]) -> T {
    c.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
}
