//! Single-network baseline: one MLP over hash-encoded space and
//! frequency-encoded time, with no deformation model.
//!
//! Where the dynamic-aware model splits motion from appearance, this network
//! absorbs both: `(x, y)` passes through the multiresolution hash grid, time
//! through plain sinusoidal features, and the concatenation feeds a single
//! MLP emitting (Re, Im). Its objective is squared-ℓ2 data consistency plus
//! optional temporal-TV and nuclear-norm penalties; with both weights at
//! zero it degrades to the pure data-consistency variant.

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamW, Tape, Tensor, Var};
use crate::baselines::regularizers::{nuclear_norm_op, temporal_tv_op, RegularizerWeights};
use crate::encoding::{frequency_features, hash_encode, HashGrid, HashGridConfig};
use crate::image::{ComplexImage, ImageSequence};
use crate::model::{frame_time_with_canonical, lattice_coords, BoundMlp, Mlp};
use crate::mri::{channels_to_complex, KSpaceAcquisition};
use crate::train::{DataTerm, FrameSchedule, TraceRow, TrainConfig, TrainReport};
use crate::{rng, Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashInrConfig {
    /// Rendered image side length.
    pub grid: usize,
    /// Frequency bands for time.
    pub temporal_bands: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub hash: HashGridConfig,
}

impl HashInrConfig {
    /// Defaults mirroring the dynamic-aware model's capacity, so comparisons
    /// measure the architecture rather than the parameter budget.
    pub fn for_grid(grid: usize) -> Self {
        Self {
            grid,
            temporal_bands: 6,
            hidden_width: 64,
            hidden_layers: 5,
            hash: HashGridConfig {
                levels: 8,
                table_size_log2: 14,
                features: 2,
                base_resolution: 4,
                growth: crate::encoding::Growth::FinestResolution(grid.max(8)),
            },
        }
    }

    fn input_dim(&self) -> usize {
        self.hash.output_dim() + 2 * self.temporal_bands
    }
}

#[derive(Clone)]
pub struct HashInrModel<T: Real> {
    config: HashInrConfig,
    net: Mlp<T>,
    grid: HashGrid<T>,
}

pub struct BoundHashInr {
    pub net: BoundMlp,
    pub tables: Vec<Var>,
}

impl BoundHashInr {
    pub fn param_vars(&self) -> Vec<Var> {
        let mut out = self.net.param_vars();
        out.extend(self.tables.iter().copied());
        out
    }
}

impl<T: Real> HashInrModel<T> {
    pub fn new(config: HashInrConfig, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let net = Mlp::new(config.input_dim(), config.hidden_width, config.hidden_layers, 2, &mut r);
        let grid = HashGrid::init(config.hash, &mut r);
        Self { config, net, grid }
    }

    pub fn config(&self) -> &HashInrConfig {
        &self.config
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = self.net.params();
        out.extend(self.grid.tables().iter());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = self.net.params_mut();
        out.extend(self.grid.tables_mut().iter_mut());
        out
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> BoundHashInr {
        BoundHashInr {
            net: self.net.bind(tape),
            tables: self.grid.tables().iter().map(|t| tape.param(t.clone())).collect(),
        }
    }

    /// Same time normalization as the dynamic-aware model (anchored at
    /// frame 0), so both methods see identical time coordinates.
    pub fn frame_time(&self, k: usize, total: usize) -> T {
        frame_time_with_canonical(k, total, 0)
    }

    /// Render one frame's `[p, 2]` output on the tape.
    pub fn render_on_tape(
        &self,
        tape: &mut Tape<T>,
        bound: &BoundHashInr,
        coords: &Tensor<T>,
        t: T,
    ) -> Var {
        let p = coords.rows();
        let cv = tape.constant(coords.clone());
        let encoded = hash_encode(tape, &self.config.hash, cv, &bound.tables);
        let t_feat = frequency_features(&Tensor::from_vec(vec![1, 1], vec![t]), self.config.temporal_bands);
        let width = t_feat.len();
        let mut tiled = Vec::with_capacity(p * width);
        for _ in 0..p {
            tiled.extend_from_slice(t_feat.data());
        }
        let tv = tape.constant(Tensor::from_vec(vec![p, width], tiled));
        let full = tape.concat_cols(&[encoded, tv]);
        bound.net.forward(tape, full)
    }

    /// Inference path: the frame at `t` as a complex image.
    pub fn render_image(&self, t: T) -> ComplexImage<T> {
        let n = self.config.grid;
        let coords = lattice_coords(n);
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let out = self.render_on_tape(&mut tape, &bound, &coords, t);
        ComplexImage::from_vec(n, channels_to_complex(tape.value(out)))
    }

    pub fn render_sequence(&self, total: usize) -> ImageSequence<T> {
        ImageSequence::new((0..total).map(|k| self.render_image(self.frame_time(k, total))).collect())
    }
}

/// Full objective over an already-rendered sequence: squared-ℓ2 data terms
/// for every frame plus the weighted regularizers.
fn sequence_objective<T: Real>(
    tape: &mut Tape<T>,
    data: &DataTerm<T>,
    rendered: &[Var],
    weights: &RegularizerWeights<T>,
) -> Result<Var> {
    let mut total: Option<Var> = None;
    let mut add = |tape: &mut Tape<T>, v: Var| {
        total = Some(match total {
            Some(t) => tape.add(t, v),
            None => v,
        });
    };
    for (k, &frame) in rendered.iter().enumerate() {
        let term = data.l2(tape, frame, k);
        add(tape, term);
    }
    if weights.temporal > T::zero() {
        let tv = temporal_tv_op(tape, rendered)?;
        let scaled = tape.scale(tv, weights.temporal);
        add(tape, scaled);
    }
    if weights.low_rank > T::zero() {
        let nn = nuclear_norm_op(tape, rendered)?;
        let scaled = tape.scale(nn, weights.low_rank);
        add(tape, scaled);
    }
    Ok(total.expect("objective over at least one frame"))
}

/// Optimize the baseline against an acquisition.
///
/// Without regularizers each step fits one frame (cycling like the main
/// training loop); with any weight positive each step renders the whole
/// sequence so the coupling terms see every frame. A non-finite loss or
/// gradient aborts with [`Error::NonFiniteLoss`] — this baseline keeps no
/// rollback snapshots.
pub fn hashinr_optimize<T: Real>(
    model: &mut HashInrModel<T>,
    acq: &KSpaceAcquisition<T>,
    maps: &[ComplexImage<T>],
    weights: &RegularizerWeights<T>,
    cfg: &TrainConfig<T>,
) -> Result<TrainReport<T>> {
    cfg.validate()?;
    if acq.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "optimization needs at least 2 frames, got {}",
            acq.len()
        )));
    }
    if acq.grid != model.config.grid {
        return Err(Error::ShapeMismatch(format!(
            "model renders {} pixels per side, acquisition expects {}",
            model.config.grid, acq.grid
        )));
    }
    if weights.temporal < T::zero() || weights.low_rank < T::zero() {
        return Err(Error::InvalidArgument("regularizer weights must be nonnegative".into()));
    }
    let data = DataTerm::new(acq, maps)?;
    let total = acq.len();
    let coords = lattice_coords(model.config.grid);
    let coupled = weights.temporal > T::zero() || weights.low_rank > T::zero();
    let shapes: Vec<Vec<usize>> = model.params().iter().map(|p| p.shape().to_vec()).collect();
    let mut opt = AdamW::new(cfg.optimizer, &model.params());
    let mut schedule_rng = rng::seeded(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let (loss_var, label) = if coupled {
            let rendered: Vec<Var> = (0..total)
                .map(|k| model.render_on_tape(&mut tape, &bound, &coords, model.frame_time(k, total)))
                .collect();
            (sequence_objective(&mut tape, &data, &rendered, weights)?, 0)
        } else {
            let k = match cfg.schedule {
                FrameSchedule::Cyclic => it % total,
                FrameSchedule::Random => {
                    let draw = rng::unit(&mut schedule_rng) * total as f64;
                    (draw as usize).min(total - 1)
                }
            };
            let rendered = model.render_on_tape(&mut tape, &bound, &coords, model.frame_time(k, total));
            (data.l2(&mut tape, rendered, k), k)
        };
        let loss = tape.value(loss_var).item();
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it });
        }
        let grads_map = tape.backward(loss_var)?;
        let grads: Vec<Tensor<T>> = bound
            .param_vars()
            .iter()
            .zip(&shapes)
            .map(|(&v, shape)| {
                grads_map.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape.clone()))
            })
            .collect();
        let mut params = model.params_mut();
        opt.step(&mut params, &grads)?;
        trace.push(TraceRow { iteration: it, frame: label, loss });
    }

    Ok(TrainReport { trace, stopped_early: false, diverged_at: None })
}

#[cfg(test)]
mod tests {
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use super::*;
    use crate::baselines::regularizers::temporal_tv;
    use crate::mri::{complex_to_channels, GriddingPlan};
    use crate::phantom::{
        generate_coil_maps, generate_phantom, retrospective_undersample, DynamicPhantomSpec,
    };

    fn small_config(grid: usize) -> HashInrConfig {
        let mut config = HashInrConfig::for_grid(grid);
        config.hidden_width = 16;
        config.hidden_layers = 2;
        config.temporal_bands = 3;
        config.hash.levels = 4;
        config.hash.table_size_log2 = 8;
        config
    }

    fn toy_problem(
        n: usize,
        frames: usize,
        coils: usize,
        spokes: usize,
    ) -> (ImageSequence<f32>, KSpaceAcquisition<f32>, Vec<ComplexImage<f32>>) {
        let gt = generate_phantom(&DynamicPhantomSpec::<f32>::beating(n, frames)).unwrap();
        let maps = generate_coil_maps(coils, n, 7);
        let acq = retrospective_undersample(&gt, &maps, spokes, 0).unwrap();
        (gt, acq, maps)
    }

    #[test]
    fn zero_weights_reduce_to_the_data_term() {
        let (_, acq, maps) = toy_problem(16, 3, 2, 3);
        let data = DataTerm::new(&acq, &maps).unwrap();
        let model = HashInrModel::<f32>::new(small_config(16), 3);
        let coords = lattice_coords(16);

        // First cyclic iteration fits frame 0; its recorded loss must equal
        // the bare squared-ℓ2 data term of the initial rendering.
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let rendered = model.render_on_tape(&mut tape, &bound, &coords, model.frame_time(0, 3));
        let expected = {
            let v = data.l2(&mut tape, rendered, 0);
            tape.value(v).item()
        };

        let mut trained = model.clone();
        let cfg = TrainConfig { iterations: 1, ..TrainConfig::default() };
        let report =
            hashinr_optimize(&mut trained, &acq, &maps, &RegularizerWeights::default(), &cfg)
                .unwrap();
        assert_relative_eq!(report.trace[0].loss, expected, max_relative = 1e-6);
    }

    #[test]
    fn objective_with_weights_adds_the_regularizers() {
        let (gt, acq, maps) = toy_problem(16, 3, 2, 3);
        let data = DataTerm::new(&acq, &maps).unwrap();
        let weights = RegularizerWeights { temporal: 0.5f32, low_rank: 0.25 };

        let mut tape = Tape::new();
        let rendered: Vec<Var> =
            gt.iter().map(|f| tape.constant(complex_to_channels(f.data()))).collect();
        let full = sequence_objective(&mut tape, &data, &rendered, &weights).unwrap();

        let mut plain = 0.0f32;
        for (k, &r) in rendered.iter().enumerate() {
            let v = data.l2(&mut tape, r, k);
            plain += tape.value(v).item();
        }
        let tv = temporal_tv(&gt).unwrap();
        let nn = crate::baselines::regularizers::nuclear_norm(&gt).unwrap();
        assert_relative_eq!(
            tape.value(full).item(),
            plain + 0.5 * tv + 0.25 * nn,
            max_relative = 1e-4
        );
    }

    #[test]
    fn perfect_rendering_zeroes_the_data_term() {
        // Re-simulate the acquisition through the gridded operator so the
        // ground truth is an exact fit, then evaluate the full objective with
        // zero weights at the ground-truth rendering.
        let (gt, mut acq, maps) = toy_problem(16, 2, 2, 4);
        for (k, frame) in acq.frames.iter_mut().enumerate() {
            let plan = GriddingPlan::new(gt.size(), &frame.trajectory.points);
            for (c, map) in maps.iter().enumerate() {
                let weighted = ComplexImage::from_vec(
                    gt.size(),
                    gt.frame(k).data().iter().zip(map.data()).map(|(&z, &s)| z * s).collect(),
                );
                frame.samples[c] = plan.forward(&weighted);
            }
        }
        let data = DataTerm::new(&acq, &maps).unwrap();
        let mut tape = Tape::new();
        let rendered: Vec<Var> =
            gt.iter().map(|f| tape.constant(complex_to_channels(f.data()))).collect();
        let v = sequence_objective(&mut tape, &data, &rendered, &RegularizerWeights::default())
            .unwrap();
        assert_abs_diff_eq!(tape.value(v).item(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn optimization_reduces_the_loss_deterministically() {
        let (_, acq, maps) = toy_problem(16, 3, 2, 3);
        let cfg = TrainConfig { iterations: 60, ..TrainConfig::default() };
        let run = || {
            let mut model = HashInrModel::<f32>::new(small_config(16), 3);
            hashinr_optimize(&mut model, &acq, &maps, &RegularizerWeights::default(), &cfg)
                .unwrap()
        };
        let (a, b) = (run(), run());
        let first = a.cycle_mean(3, false).unwrap();
        let last = a.cycle_mean(3, true).unwrap();
        assert!(last < first, "loss did not drop: {first} -> {last}");
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.loss, y.loss);
        }
    }

    #[test]
    fn temporal_weight_lowers_the_tv_of_the_result() {
        let (_, acq, maps) = toy_problem(16, 4, 2, 2);
        let cfg = TrainConfig { iterations: 40, ..TrainConfig::default() };

        let mut free = HashInrModel::<f32>::new(small_config(16), 3);
        hashinr_optimize(&mut free, &acq, &maps, &RegularizerWeights::default(), &cfg).unwrap();
        let tv_free = temporal_tv(&free.render_sequence(4)).unwrap();

        let mut reg = HashInrModel::<f32>::new(small_config(16), 3);
        let weights = RegularizerWeights { temporal: 5.0f32, low_rank: 0.0 };
        hashinr_optimize(&mut reg, &acq, &maps, &weights, &cfg).unwrap();
        let tv_reg = temporal_tv(&reg.render_sequence(4)).unwrap();

        assert!(
            tv_reg < tv_free,
            "temporal TV did not shrink: {tv_free} -> {tv_reg}"
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let (_, acq, maps) = toy_problem(16, 2, 2, 3);
        let cfg = TrainConfig { iterations: 1, ..TrainConfig::default() };

        let mut model = HashInrModel::<f32>::new(small_config(8), 3);
        assert!(matches!(
            hashinr_optimize(&mut model, &acq, &maps, &RegularizerWeights::default(), &cfg),
            Err(Error::ShapeMismatch(_))
        ));

        let mut model = HashInrModel::<f32>::new(small_config(16), 3);
        let negative = RegularizerWeights { temporal: -1.0f32, low_rank: 0.0 };
        assert!(matches!(
            hashinr_optimize(&mut model, &acq, &maps, &negative, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }
}
