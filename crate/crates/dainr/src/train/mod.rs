//! Self-supervised optimization of the dynamic-aware model.
//!
//! Each step renders one frame's full coordinate lattice, compares its
//! predicted k-space against that frame's measured samples, and takes one
//! AdamW step — there is no ground truth anywhere in the loop. [`train`]
//! covers plain reconstruction; the [`interpolation`] helpers prepare the
//! altered frame schedules and feature inputs for the resolution- and
//! frame-rate-extension protocols, which then run through the same
//! [`train_schedule`] core.

pub mod interpolation;
pub mod objective;

use std::io::Write;
use std::rc::Rc;

use crate::autodiff::{AdamW, AdamWConfig, Tape, Tensor};
use crate::baselines::zero_filled_recon;
use crate::image::{ComplexImage, ImageSequence};
use crate::model::{DaInrModel, FeatureExtractor};
use crate::mri::{channels_to_complex, KSpaceAcquisition};
use crate::{rng, scalar, Error, Real, Result};

pub use interpolation::{
    kept_frames, lowres_sequence, lowres_size, subset_acquisition, temporal_protocol,
    TemporalProtocol,
};
pub use objective::DataTerm;

/// Which frame each iteration fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameSchedule {
    /// Frame `i % count` at iteration `i` (the default).
    Cyclic,
    /// Uniformly random frame, drawn from the config seed.
    Random,
}

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig<T: Real> {
    pub iterations: usize,
    pub optimizer: AdamWConfig<T>,
    pub schedule: FrameSchedule,
    /// Seed for the random schedule; unused when cyclic.
    pub seed: u64,
    /// Keep a rollback copy of the model every this many iterations.
    pub snapshot_every: usize,
    /// Stop once the mean loss over the last window is within
    /// `plateau_tolerance` (relative) of the window before it.
    pub plateau_window: usize,
    pub plateau_tolerance: f64,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 2000,
            optimizer: AdamWConfig::default(),
            schedule: FrameSchedule::Cyclic,
            seed: 0,
            snapshot_every: 100,
            plateau_window: 200,
            plateau_tolerance: 1e-5,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if self.optimizer.lr <= T::zero() {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.snapshot_every == 0 || self.plateau_window == 0 {
            return Err(Error::InvalidArgument(
                "snapshot interval and plateau window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One entry of the frame schedule: which data-term frame to fit, at what
/// time coordinate, under which label in the trace.
///
/// For plain reconstruction all three indices coincide; temporal
/// interpolation trains on a subset acquisition whose frames keep their
/// original time coordinates and labels.
#[derive(Clone)]
pub struct StepFrame<T: Real> {
    pub acq_frame: usize,
    pub label: usize,
    pub time: T,
    pub features: Option<Rc<Tensor<T>>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub iteration: usize,
    pub frame: usize,
    pub loss: T,
}

#[derive(Clone, Debug)]
pub struct TrainReport<T> {
    pub trace: Vec<TraceRow<T>>,
    pub stopped_early: bool,
    /// Iteration at which the loss or a gradient went non-finite. The model
    /// is left at its last snapshot when this is set.
    pub diverged_at: Option<usize>,
}

impl<T: Real> TrainReport<T> {
    pub fn final_loss(&self) -> Option<T> {
        self.trace.last().map(|r| r.loss)
    }

    /// Mean loss over the first/last full cycle of `frames` distinct frames,
    /// for before/after comparisons that are fair across frame difficulty.
    pub fn cycle_mean(&self, frames: usize, last: bool) -> Option<f64> {
        if self.trace.len() < frames || frames == 0 {
            return None;
        }
        let rows = if last {
            &self.trace[self.trace.len() - frames..]
        } else {
            &self.trace[..frames]
        };
        Some(rows.iter().map(|r| scalar::cast::<T, f64>(r.loss)).sum::<f64>() / frames as f64)
    }

    /// Write the trace as CSV: `iteration,frame,loss`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "iteration,frame,loss")?;
        for row in &self.trace {
            writeln!(w, "{},{},{}", row.iteration, row.frame, scalar::cast::<T, f64>(row.loss))?;
        }
        Ok(())
    }
}

/// Zero-filled reconstructions grouped as extractor inputs, one group per
/// frame of the sequence being rendered.
pub struct FeatureBank<T: Real> {
    inputs: Vec<Vec<ComplexImage<T>>>,
}

impl<T: Real> FeatureBank<T> {
    /// One input per frame: that frame's own zero-filled reconstruction.
    pub fn for_reconstruction(
        acq: &KSpaceAcquisition<T>,
        maps: &[ComplexImage<T>],
    ) -> Result<Self> {
        let zf = zero_filled_recon(acq, Some(maps))?;
        Ok(Self { inputs: zf.iter().map(|f| vec![f.clone()]).collect() })
    }

    /// Two inputs per frame of the *full* sequence: the zero-filled
    /// reconstructions of its nearest kept neighbor on each side. A kept
    /// frame is its own nearest neighbor twice; past the last kept frame the
    /// left neighbor stands in for the missing right one.
    pub fn for_temporal(
        kept_acq: &KSpaceAcquisition<T>,
        maps: &[ComplexImage<T>],
        kept: &[usize],
        total: usize,
    ) -> Result<Self> {
        if kept.is_empty() || kept.len() != kept_acq.len() {
            return Err(Error::InvalidArgument(format!(
                "{} kept indices for {} acquisition frames",
                kept.len(),
                kept_acq.len()
            )));
        }
        if kept.windows(2).any(|w| w[0] >= w[1]) || *kept.last().unwrap() >= total {
            return Err(Error::InvalidArgument(
                "kept frame indices must be strictly increasing and below the total".into(),
            ));
        }
        let zf = zero_filled_recon(kept_acq, Some(maps))?;
        let inputs = (0..total)
            .map(|k| {
                let right = kept.partition_point(|&i| i < k);
                let left = if right < kept.len() && kept[right] == k {
                    right
                } else {
                    right.saturating_sub(1)
                };
                let right = right.min(kept.len() - 1);
                vec![zf.frame(left).clone(), zf.frame(right).clone()]
            })
            .collect();
        Ok(Self { inputs })
    }

    pub fn frames(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs_per_frame(&self) -> usize {
        self.inputs[0].len()
    }

    /// Run the extractor over every frame's input group at `out_size`.
    pub fn extract(
        &self,
        fx: &FeatureExtractor<T>,
        out_size: usize,
    ) -> Result<Vec<Rc<Tensor<T>>>> {
        if fx.input_frames() != self.inputs_per_frame() {
            return Err(Error::InvalidArgument(format!(
                "extractor wants {} input frame(s), bank provides {}",
                fx.input_frames(),
                self.inputs_per_frame()
            )));
        }
        self.inputs
            .iter()
            .map(|group| {
                let refs: Vec<&ComplexImage<T>> = group.iter().collect();
                fx.extract(&refs, out_size).map(Rc::new)
            })
            .collect()
    }
}

/// Build the plain reconstruction schedule: every acquisition frame once per
/// cycle, at its native time coordinate, with its own zero-filled features
/// when the pathway is enabled.
pub fn reconstruction_steps<T: Real>(
    model: &DaInrModel<T>,
    acq: &KSpaceAcquisition<T>,
    maps: &[ComplexImage<T>],
) -> Result<Vec<StepFrame<T>>> {
    let total = acq.len();
    let features: Vec<Option<Rc<Tensor<T>>>> = match model.extractor() {
        None => vec![None; total],
        Some(fx) => {
            if fx.input_frames() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "reconstruction features take 1 input frame, extractor wants {}",
                    fx.input_frames()
                )));
            }
            let bank = FeatureBank::for_reconstruction(acq, maps)?;
            bank.extract(fx, model.config().grid)?.into_iter().map(Some).collect()
        }
    };
    Ok(features
        .into_iter()
        .enumerate()
        .map(|(k, features)| StepFrame {
            acq_frame: k,
            label: k,
            time: model.frame_time(k, total),
            features,
        })
        .collect())
}

/// Train against a full acquisition: one frame per step, ℓ1 k-space loss,
/// AdamW updates. Requires at least two frames — a single frame has no
/// dynamics to model.
pub fn train<T: Real>(
    model: &mut DaInrModel<T>,
    acq: &KSpaceAcquisition<T>,
    maps: &[ComplexImage<T>],
    cfg: &TrainConfig<T>,
) -> Result<TrainReport<T>> {
    if acq.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 2 frames, got {}",
            acq.len()
        )));
    }
    let data = DataTerm::new(acq, maps)?;
    let steps = reconstruction_steps(model, acq, maps)?;
    train_schedule(model, &data, &steps, cfg)
}

/// The shared optimization core: iterate over `steps` per `cfg.schedule`,
/// rendering on a fresh tape each time.
///
/// A non-finite loss or gradient stops the run and rolls the model back to
/// the most recent snapshot; the report's `diverged_at` records where. The
/// trace covers every completed iteration.
pub fn train_schedule<T: Real>(
    model: &mut DaInrModel<T>,
    data: &DataTerm<T>,
    steps: &[StepFrame<T>],
    cfg: &TrainConfig<T>,
) -> Result<TrainReport<T>> {
    cfg.validate()?;
    if steps.is_empty() {
        return Err(Error::InvalidArgument("empty frame schedule".into()));
    }
    if let Some(bad) = steps.iter().find(|s| s.acq_frame >= data.frames()) {
        return Err(Error::InvalidArgument(format!(
            "schedule references frame {} of a {}-frame acquisition",
            bad.acq_frame,
            data.frames()
        )));
    }
    if data.grid() != model.config().grid {
        return Err(Error::ShapeMismatch(format!(
            "model renders {} pixels per side, acquisition expects {}",
            model.config().grid,
            data.grid()
        )));
    }

    let lattice = model.lattice(model.config().grid);
    let shapes: Vec<Vec<usize>> =
        model.params().iter().map(|p| p.shape().to_vec()).collect();
    let mut opt = AdamW::new(cfg.optimizer, &model.params());
    let mut schedule_rng = rng::seeded(cfg.seed);
    let mut snapshot = model.clone();
    let mut trace: Vec<TraceRow<T>> = Vec::with_capacity(cfg.iterations);
    let mut stopped_early = false;

    for it in 0..cfg.iterations {
        let step = match cfg.schedule {
            FrameSchedule::Cyclic => &steps[it % steps.len()],
            FrameSchedule::Random => {
                let draw = rng::unit(&mut schedule_rng) * steps.len() as f64;
                &steps[(draw as usize).min(steps.len() - 1)]
            }
        };

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let rendered =
            model.render_on_tape(&mut tape, &bound, &lattice, step.time, step.features.as_deref())?;
        let loss_var = data.l1(&mut tape, rendered, step.acq_frame);
        let loss = tape.value(loss_var).item();
        if !loss.is_finite() {
            *model = snapshot;
            return Ok(TrainReport { trace, stopped_early: false, diverged_at: Some(it) });
        }

        let grads_map = tape.backward(loss_var)?;
        // A parameter can legitimately sit out a step — the deformation net
        // is bypassed at the canonical time — so missing gradients are zero.
        let grads: Vec<Tensor<T>> = bound
            .param_vars()
            .iter()
            .zip(&shapes)
            .map(|(&v, shape)| {
                grads_map.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape.clone()))
            })
            .collect();
        let mut params = model.params_mut();
        match opt.step(&mut params, &grads) {
            Ok(()) => {}
            Err(Error::NonFiniteGradient { .. }) => {
                drop(params);
                *model = snapshot;
                return Ok(TrainReport { trace, stopped_early: false, diverged_at: Some(it) });
            }
            Err(e) => return Err(e),
        }

        trace.push(TraceRow { iteration: it, frame: step.label, loss });
        if (it + 1) % cfg.snapshot_every == 0 {
            snapshot = model.clone();
        }
        if plateaued(&trace, cfg.plateau_window, cfg.plateau_tolerance) {
            stopped_early = true;
            break;
        }
    }

    Ok(TrainReport { trace, stopped_early, diverged_at: None })
}

/// Mean loss of the last window vs the window before it, relative.
fn plateaued<T: Real>(trace: &[TraceRow<T>], window: usize, tolerance: f64) -> bool {
    if trace.len() < 2 * window {
        return false;
    }
    let mean = |rows: &[TraceRow<T>]| {
        rows.iter().map(|r| scalar::cast::<T, f64>(r.loss)).sum::<f64>() / window as f64
    };
    let recent = mean(&trace[trace.len() - window..]);
    let previous = mean(&trace[trace.len() - 2 * window..trace.len() - window]);
    (previous - recent).abs() <= tolerance * previous.abs().max(f64::MIN_POSITIVE)
}

/// Render `total` frames at resolution ratio `ratio`, with per-frame feature
/// blocks when the pathway is enabled (`features` must then cover every
/// frame at the scaled resolution).
pub fn render_sequence<T: Real>(
    model: &DaInrModel<T>,
    total: usize,
    ratio: f64,
    features: Option<&[Rc<Tensor<T>>]>,
) -> Result<ImageSequence<T>> {
    if total == 0 {
        return Err(Error::InvalidArgument("cannot render an empty sequence".into()));
    }
    if let Some(f) = features {
        if f.len() != total {
            return Err(Error::InvalidArgument(format!(
                "{} feature blocks for {total} frames",
                f.len()
            )));
        }
    }
    if ratio < 1.0 {
        return Err(Error::InvalidArgument(format!("scale ratio {ratio} < 1")));
    }
    let out_size = (ratio * model.config().grid as f64).round() as usize;
    let lattice = model.lattice(out_size);
    let mut frames = Vec::with_capacity(total);
    for k in 0..total {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let t = model.frame_time(k, total);
        let block = features.map(|f| f[k].as_ref());
        let out = model.render_on_tape(&mut tape, &bound, &lattice, t, block)?;
        frames.push(ComplexImage::from_vec(out_size, channels_to_complex(tape.value(out))));
    }
    Ok(ImageSequence::new(frames))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::model::{load_checkpoint, save_checkpoint, DaInrConfig, FeatureSettings};
    use crate::phantom::{generate_coil_maps, generate_phantom, retrospective_undersample, DynamicPhantomSpec};

    fn small_config(grid: usize) -> DaInrConfig {
        let mut config = DaInrConfig::for_grid(grid);
        config.hidden_width = 16;
        config.hidden_layers = 2;
        config.spatial_bands = 4;
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
    ) -> (KSpaceAcquisition<f32>, Vec<ComplexImage<f32>>) {
        let gt = generate_phantom(&DynamicPhantomSpec::<f32>::beating(n, frames)).unwrap();
        let maps = generate_coil_maps(coils, n, 7);
        let acq = retrospective_undersample(&gt, &maps, spokes, 0).unwrap();
        (acq, maps)
    }

    #[test]
    fn loss_drops_and_moving_average_trends_down() {
        let (acq, maps) = toy_problem(32, 8, 2, 4);
        let mut model = DaInrModel::<f32>::new(small_config(32), 11);
        let cfg = TrainConfig { iterations: 200, ..TrainConfig::default() };
        let report = train(&mut model, &acq, &maps, &cfg).unwrap();

        assert_eq!(report.trace.len(), 200);
        assert!(report.diverged_at.is_none());
        let first = report.cycle_mean(8, false).unwrap();
        let last = report.cycle_mean(8, true).unwrap();
        assert!(
            last * 5.0 < first,
            "expected a 5x loss drop, got {first:.3} -> {last:.3}"
        );

        // Window-50 moving average never climbs back above an earlier value
        // by more than a small ripple.
        let losses: Vec<f64> =
            report.trace.iter().map(|r| r.loss as f64).collect();
        let avg: Vec<f64> = losses.windows(50).map(|w| w.iter().sum::<f64>() / 50.0).collect();
        for pair in avg.windows(2) {
            assert!(pair[1] <= pair[0] * 1.05, "moving average climbed: {pair:?}");
        }
    }

    #[test]
    fn same_seed_reproduces_the_loss_trace() {
        let (acq, maps) = toy_problem(16, 3, 2, 3);
        let cfg = TrainConfig { iterations: 30, ..TrainConfig::default() };
        let run = || {
            let mut model = DaInrModel::<f32>::new(small_config(16), 5);
            train(&mut model, &acq, &maps, &cfg).unwrap().trace
        };
        let (a, b) = (run(), run());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.iteration, y.iteration);
            assert_eq!(x.frame, y.frame);
            assert_eq!(x.loss, y.loss, "traces diverge at iteration {}", x.iteration);
        }
    }

    #[test]
    fn single_frame_acquisition_is_rejected() {
        let (acq, maps) = toy_problem(16, 1, 2, 3);
        let mut model = DaInrModel::<f32>::new(small_config(16), 5);
        assert!(matches!(
            train(&mut model, &acq, &maps, &TrainConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn every_parameter_tensor_moves_within_a_hundred_iterations() {
        let (acq, maps) = toy_problem(16, 3, 2, 3);
        let mut model = DaInrModel::<f32>::new(small_config(16), 5);
        let before: Vec<Tensor<f32>> = model.params().iter().map(|p| (*p).clone()).collect();
        let cfg = TrainConfig { iterations: 100, ..TrainConfig::default() };
        train(&mut model, &acq, &maps, &cfg).unwrap();
        for (i, (b, a)) in before.iter().zip(model.params()).enumerate() {
            assert!(
                b.data().iter().zip(a.data()).any(|(x, y)| x != y),
                "parameter tensor {i} never changed"
            );
        }
    }

    #[test]
    fn frozen_extractor_does_not_move() {
        let mut config = small_config(16);
        config.features = Some(FeatureSettings { channels: 4, layers: 2, input_frames: 1 });
        let (acq, maps) = toy_problem(16, 3, 2, 3);
        let mut model = DaInrModel::<f32>::new(config, 5);
        let before: Vec<_> = model.extractor().unwrap().tensors();
        let cfg = TrainConfig { iterations: 20, ..TrainConfig::default() };
        train(&mut model, &acq, &maps, &cfg).unwrap();
        let after = model.extractor().unwrap().tensors();
        for ((_, b), (_, a)) in before.iter().zip(&after) {
            assert_eq!(b.data(), a.data());
        }
    }

    #[test]
    fn random_schedule_still_hits_every_frame() {
        let (acq, maps) = toy_problem(16, 4, 2, 3);
        let mut model = DaInrModel::<f32>::new(small_config(16), 5);
        let cfg = TrainConfig {
            iterations: 40,
            schedule: FrameSchedule::Random,
            seed: 3,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &acq, &maps, &cfg).unwrap();
        let mut seen = [false; 4];
        for row in &report.trace {
            seen[row.frame] = true;
        }
        assert!(seen.iter().all(|&s| s), "frames visited: {seen:?}");
    }

    #[test]
    fn checkpoint_round_trip_renders_bit_identically() {
        let dir = tempfile::tempdir().unwrap();
        let (acq, maps) = toy_problem(16, 3, 2, 3);
        let mut model = DaInrModel::<f32>::new(small_config(16), 5);
        let cfg = TrainConfig { iterations: 12, ..TrainConfig::default() };
        train(&mut model, &acq, &maps, &cfg).unwrap();

        let path = dir.path().join("model.dainr");
        save_checkpoint(&model, &path).unwrap();
        let restored: DaInrModel<f32> = load_checkpoint(&path).unwrap();

        let a = render_sequence(&model, 3, 1.0, None).unwrap();
        let b = render_sequence(&restored, 3, 1.0, None).unwrap();
        for (fa, fb) in a.iter().zip(b.iter()) {
            assert_eq!(fa.data(), fb.data());
        }
    }

    #[test]
    fn plateau_stops_a_converged_run_early() {
        let (acq, maps) = toy_problem(16, 2, 1, 2);
        let mut model = DaInrModel::<f32>::new(small_config(16), 5);
        // A zero learning rate never changes the loss, so the plateau check
        // must fire exactly at two windows.
        let cfg = TrainConfig {
            iterations: 500,
            optimizer: AdamWConfig::with_lr(1e-30),
            plateau_window: 20,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &acq, &maps, &cfg).unwrap();
        assert!(report.stopped_early);
        assert_eq!(report.trace.len(), 40);
    }

    #[test]
    fn divergence_rolls_back_to_the_last_snapshot() {
        let (acq, maps) = toy_problem(16, 2, 1, 2);
        let mut model = DaInrModel::<f32>::new(small_config(16), 5);
        // An absurd learning rate overflows f32 within a few steps.
        let cfg = TrainConfig {
            iterations: 400,
            optimizer: AdamWConfig::with_lr(1e30),
            snapshot_every: 5,
            ..TrainConfig::default()
        };
        let reference = model.clone();
        let report = train(&mut model, &acq, &maps, &cfg).unwrap();
        let at = report.diverged_at.expect("run must diverge");
        assert!(report.trace.len() <= at);

        // The model equals some snapshot taken at a multiple of 5 — in the
        // worst case the initial state — and is finite throughout.
        for p in model.params() {
            assert!(p.all_finite());
        }
        if at < 5 {
            for (b, a) in reference.params().iter().zip(model.params()) {
                assert_eq!(b.data(), a.data());
            }
        }
    }

    #[test]
    fn trace_csv_has_one_row_per_iteration() {
        let report = TrainReport {
            trace: vec![
                TraceRow { iteration: 0, frame: 0, loss: 2.5f32 },
                TraceRow { iteration: 1, frame: 1, loss: 1.25f32 },
            ],
            stopped_early: false,
            diverged_at: None,
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "iteration,frame,loss\n0,0,2.5\n1,1,1.25\n");
    }

    #[test]
    fn rendering_upscales_to_the_requested_ratio() {
        let model = DaInrModel::<f32>::new(small_config(16), 5);
        let seq = render_sequence(&model, 2, 1.5, None).unwrap();
        assert_eq!(seq.size(), 24);
        assert_eq!(seq.len(), 2);
        assert!(matches!(
            render_sequence(&model, 2, 0.5, None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn feature_bank_neighbor_selection() {
        let n = 16;
        let gt = generate_phantom(&DynamicPhantomSpec::<f32>::beating(n, 6)).unwrap();
        let maps = generate_coil_maps(2, n, 7);
        let acq = retrospective_undersample(&gt, &maps, 3, 0).unwrap();
        let kept = vec![0, 2, 4];
        let kept_acq = subset_acquisition(&acq, &kept).unwrap();
        let bank = FeatureBank::for_temporal(&kept_acq, &maps, &kept, 6).unwrap();
        assert_eq!(bank.frames(), 6);
        assert_eq!(bank.inputs_per_frame(), 2);

        let zf = zero_filled_recon(&kept_acq, Some(&maps)).unwrap();
        // Kept frame 2 -> itself twice; held-out 3 -> kept 2 and 4;
        // held-out 5 (past the end) -> kept 4 twice.
        assert_eq!(bank.inputs[2][0].data(), zf.frame(1).data());
        assert_eq!(bank.inputs[2][1].data(), zf.frame(1).data());
        assert_eq!(bank.inputs[3][0].data(), zf.frame(1).data());
        assert_eq!(bank.inputs[3][1].data(), zf.frame(2).data());
        assert_eq!(bank.inputs[5][0].data(), zf.frame(2).data());
        assert_eq!(bank.inputs[5][1].data(), zf.frame(2).data());
    }

    #[test]
    fn reconstruction_with_features_trains() {
        let mut config = small_config(16);
        config.features = Some(FeatureSettings { channels: 4, layers: 2, input_frames: 1 });
        let (acq, maps) = toy_problem(16, 3, 2, 3);
        let mut model = DaInrModel::<f32>::new(config, 5);
        let cfg = TrainConfig { iterations: 9, ..TrainConfig::default() };
        let report = train(&mut model, &acq, &maps, &cfg).unwrap();
        assert_eq!(report.trace.len(), 9);
        assert!(report.trace.iter().all(|r| r.loss.is_finite()));

        // Rendering needs the same feature blocks back.
        let bank = FeatureBank::for_reconstruction(&acq, &maps).unwrap();
        let blocks = bank.extract(model.extractor().unwrap(), 16).unwrap();
        let seq = render_sequence(&model, 3, 1.0, Some(&blocks)).unwrap();
        assert_eq!(seq.len(), 3);
        assert!(render_sequence(&model, 3, 1.0, None).is_err());
    }

    #[test]
    fn mean_loss_helper_uses_the_requested_cycles() {
        let report = TrainReport {
            trace: (0..6)
                .map(|i| TraceRow { iteration: i, frame: i % 3, loss: (6 - i) as f32 })
                .collect(),
            stopped_early: false,
            diverged_at: None,
        };
        assert_relative_eq!(report.cycle_mean(3, false).unwrap(), 5.0);
        assert_relative_eq!(report.cycle_mean(3, true).unwrap(), 2.0);
        assert!(report.cycle_mean(9, true).is_none());
    }
}
