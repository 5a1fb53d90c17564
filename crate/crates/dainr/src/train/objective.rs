//! The measured-data side of every optimization objective.
//!
//! A [`DataTerm`] freezes everything that never changes across iterations —
//! per-frame gridding plans, coil maps as tape constants, and the measured
//! samples as two-channel targets — and then builds the per-frame residual
//! terms on a fresh tape each step. The absolute-value reduction is used by
//! the dynamic-aware model, the squared one by the single-network baseline;
//! both sum over coils.

use std::rc::Rc;

use num_complex::Complex;

use crate::autodiff::{Tape, Tensor, Var};
use crate::image::ComplexImage;
use crate::mri::{complex_mul_const, nufft_op, GriddingPlan, KSpaceAcquisition};
use crate::{Error, Real, Result};

pub struct DataTerm<T: Real> {
    grid: usize,
    plans: Vec<Rc<GriddingPlan<T>>>,
    maps: Vec<Rc<Vec<Complex<T>>>>,
    /// `targets[frame][coil]`: measured samples as `[p, 2]` channel tensors.
    targets: Vec<Vec<Tensor<T>>>,
}

impl<T: Real> DataTerm<T> {
    pub fn new(acq: &KSpaceAcquisition<T>, maps: &[ComplexImage<T>]) -> Result<Self> {
        acq.validate()?;
        if maps.len() != acq.coils() {
            return Err(Error::ShapeMismatch(format!(
                "{} coil maps for {} coils",
                maps.len(),
                acq.coils()
            )));
        }
        if maps.iter().any(|m| m.size() != acq.grid) {
            return Err(Error::ShapeMismatch(format!(
                "coil maps sized {} on a {} grid",
                maps[0].size(),
                acq.grid
            )));
        }
        let plans = acq
            .frames
            .iter()
            .map(|f| Rc::new(GriddingPlan::new(acq.grid, &f.trajectory.points)))
            .collect();
        let targets = acq
            .frames
            .iter()
            .map(|f| {
                f.samples
                    .iter()
                    .map(|coil| {
                        Tensor::from_vec(
                            vec![coil.len(), 2],
                            coil.iter().flat_map(|z| [z.re, z.im]).collect(),
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: acq.grid,
            plans,
            maps: maps.iter().map(|m| Rc::new(m.data().to_vec())).collect(),
            targets,
        })
    }

    pub fn frames(&self) -> usize {
        self.plans.len()
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn coils(&self) -> usize {
        self.maps.len()
    }

    /// Per-coil residual samples of one frame: `F_u S_c d − m_c` for each c.
    fn residuals(&self, tape: &mut Tape<T>, rendered: Var, frame: usize) -> Vec<Var> {
        assert_eq!(
            tape.value(rendered).shape(),
            [self.grid * self.grid, 2],
            "rendered frame does not match the acquisition grid"
        );
        let plan = &self.plans[frame];
        self.maps
            .iter()
            .zip(&self.targets[frame])
            .map(|(map, target)| {
                let weighted = complex_mul_const(tape, rendered, map.clone());
                let predicted = nufft_op(tape, weighted, plan.clone());
                let m = tape.constant(target.clone());
                tape.sub(predicted, m)
            })
            .collect()
    }

    /// Σ_c ℓ1 of the complex residual moduli — the dynamic-aware loss.
    pub fn l1(&self, tape: &mut Tape<T>, rendered: Var, frame: usize) -> Var {
        let mut total: Option<Var> = None;
        for r in self.residuals(tape, rendered, frame) {
            let a = tape.complex_abs(r);
            let s = tape.sum(a);
            total = Some(match total {
                Some(t) => tape.add(t, s),
                None => s,
            });
        }
        total.expect("at least one coil")
    }

    /// Σ_c squared ℓ2 of the residual — the single-network baseline's term.
    pub fn l2(&self, tape: &mut Tape<T>, rendered: Var, frame: usize) -> Var {
        let mut total: Option<Var> = None;
        for r in self.residuals(tape, rendered, frame) {
            let sq = tape.mul(r, r);
            let s = tape.sum(sq);
            total = Some(match total {
                Some(t) => tape.add(t, s),
                None => s,
            });
        }
        total.expect("at least one coil")
    }

    /// ℓ1 norm of the measured samples of one frame, summed over coils —
    /// the loss a zero rendering produces.
    pub fn target_l1(&self, frame: usize) -> T {
        self.targets[frame]
            .iter()
            .flat_map(|t| t.data().chunks_exact(2))
            .fold(T::zero(), |acc, z| acc + (z[0] * z[0] + z[1] * z[1]).sqrt())
    }
}
