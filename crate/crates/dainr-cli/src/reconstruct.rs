//! `reconstruct` / `interpolate`: run a method against a dataset directory.
//!
//! The two commands share this module: `interpolate` is `reconstruct` with
//! the config's interpolation mode required to be active. Training runs in
//! `f32` — the dataset's on-disk precision — so saved frames carry exactly
//! the computed bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::rc::Rc;

use dainr::autodiff::{AdamWConfig, Tensor};
use dainr::baselines::{
    hashinr_optimize, zero_filled_recon, HashInrConfig, HashInrModel, RegularizerWeights,
};
use dainr::encoding::{Growth, HashGridConfig};
use dainr::image::ImageSequence;
use dainr::model::{save_checkpoint, DaInrConfig, DaInrModel, FeatureSettings};
use dainr::mri::SamplingScheme;
use dainr::phantom::{
    add_acquisition_noise, generate_coil_maps, retrospective_undersample, write_sequence,
    DatasetBundle,
};
use dainr::train::{
    lowres_sequence, lowres_size, reconstruction_steps, render_sequence, temporal_protocol,
    train_schedule, DataTerm, FeatureBank, FrameSchedule, TrainConfig, TrainReport,
};
use dainr::{real, Error};

use crate::artifacts::{
    claim_out_dir, ReconManifest, BASE_FRAMES_FILE, CHECKPOINT_FILE, FRAMES_FILE, TRACE_FILE,
};
use crate::config::{HashSection, InterpolationMode, Method, RunConfig, Schedule};
use crate::error::{CliError, Result};
use crate::preview;

type F = f32;

/// Everything a method run produces; artifacts are written from here in one
/// place so every method lays out its directory the same way.
struct Outcome {
    frames: ImageSequence<F>,
    /// Spatial interpolation: the render at the training resolution.
    base_frames: Option<ImageSequence<F>>,
    report: Option<TrainReport<F>>,
    model: Option<DaInrModel<F>>,
    kept: Option<Vec<usize>>,
}

pub fn run(config: &RunConfig, out: &Path, force: bool, require_interpolation: bool) -> Result<()> {
    let mode = config.interpolation.mode;
    if require_interpolation && mode == InterpolationMode::None {
        return Err(CliError::Usage(
            "interpolate needs interpolation.mode = \"temporal\" or \"spatial\" in the config"
                .into(),
        ));
    }
    if mode != InterpolationMode::None && config.method != Method::Dainr {
        return Err(CliError::Usage(
            "interpolation protocols require method = \"dainr\"".into(),
        ));
    }
    let dataset_dir = config.dataset.as_deref().ok_or_else(|| {
        CliError::Usage("config needs `dataset = \"<dir>\"` to reconstruct".into())
    })?;
    let bundle = DatasetBundle::<F>::load(dataset_dir)?;
    claim_out_dir(out, force)?;

    eprintln!(
        "dataset {}: {n}x{n} pixels, {} frames, {} coils, acceleration {:.1}",
        dataset_dir.display(),
        bundle.manifest.frames,
        bundle.manifest.coils,
        bundle.manifest.acceleration_factor,
        n = bundle.manifest.image_size,
    );
    if config.method != Method::Zerofill {
        eprintln!(
            "optimizing {:?} for up to {} iterations (seed {})",
            config.method, config.train.iterations, config.seed
        );
    }

    let outcome = match config.method {
        Method::Zerofill => zerofill(&bundle)?,
        Method::Hashinr => hashinr(config, &bundle)?,
        Method::Dainr => match mode {
            InterpolationMode::None => dainr_plain(config, &bundle)?,
            InterpolationMode::Temporal => dainr_temporal(config, &bundle)?,
            InterpolationMode::Spatial => dainr_spatial(config, &bundle)?,
        },
    };

    write_sequence(&out.join(FRAMES_FILE), &outcome.frames)?;
    if let Some(base) = &outcome.base_frames {
        write_sequence(&out.join(BASE_FRAMES_FILE), base)?;
    }
    if let Some(report) = &outcome.report {
        let mut w = BufWriter::new(File::create(out.join(TRACE_FILE))?);
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(model) = &outcome.model {
        save_checkpoint(model, &out.join(CHECKPOINT_FILE))?;
    }
    let report = outcome.report.as_ref();
    ReconManifest {
        method: config.method,
        frames: outcome.frames.len(),
        size: outcome.frames.size(),
        base_size: outcome.base_frames.as_ref().map(|b| b.size()),
        kept_frames: outcome.kept,
        iterations_run: report.map_or(0, |r| r.trace.len()),
        final_loss: report.and_then(|r| r.final_loss()).map(f64::from),
        stopped_early: report.is_some_and(|r| r.stopped_early),
    }
    .save(out)?;
    preview::sequence_previews(out, "frame", &outcome.frames, config.output.png)?;
    config.echo(out)?;

    if let Some(report) = report {
        match report.final_loss() {
            Some(loss) => eprintln!(
                "ran {} iterations, final loss {loss:.6}{}",
                report.trace.len(),
                if report.stopped_early { " (plateau stop)" } else { "" }
            ),
            None => eprintln!("no iterations ran"),
        }
        if let Some(at) = report.diverged_at {
            return Err(CliError::Diverged(at));
        }
    }
    eprintln!(
        "wrote {} frames of {}x{1} to {}",
        outcome.frames.len(),
        outcome.frames.size(),
        out.display()
    );
    Ok(())
}

fn train_config(config: &RunConfig) -> TrainConfig<F> {
    let t = &config.train;
    TrainConfig {
        iterations: t.iterations,
        optimizer: AdamWConfig {
            lr: real(t.lr),
            weight_decay: real(t.weight_decay),
            ..AdamWConfig::default()
        },
        schedule: match t.schedule {
            Schedule::Cyclic => FrameSchedule::Cyclic,
            Schedule::Random => FrameSchedule::Random,
        },
        seed: config.seed,
        snapshot_every: t.snapshot_every,
        plateau_window: t.plateau_window,
        plateau_tolerance: t.plateau_tolerance,
    }
}

/// The hash pyramid always tops out at the training grid resolution.
fn hash_config(h: &HashSection, grid: usize) -> HashGridConfig {
    HashGridConfig {
        levels: h.levels,
        table_size_log2: h.table_log2,
        features: h.features,
        base_resolution: h.base_resolution,
        growth: Growth::FinestResolution(grid.max(8)),
    }
}

fn dainr_config(config: &RunConfig, grid: usize, input_frames: usize) -> DaInrConfig {
    let m = &config.model;
    DaInrConfig {
        grid,
        spatial_bands: m.spatial_bands,
        temporal_bands: m.temporal_bands,
        hidden_width: m.hidden_width,
        hidden_layers: m.hidden_layers,
        hash: hash_config(&config.hash, grid),
        canonical_index: m.canonical_index,
        features: config.features.enabled.then_some(FeatureSettings {
            channels: config.features.channels,
            layers: config.features.layers,
            input_frames,
        }),
    }
}

fn zerofill(bundle: &DatasetBundle<F>) -> Result<Outcome> {
    let frames = zero_filled_recon(&bundle.acquisition, Some(&bundle.coil_maps))?;
    Ok(Outcome { frames, base_frames: None, report: None, model: None, kept: None })
}

fn hashinr(config: &RunConfig, bundle: &DatasetBundle<F>) -> Result<Outcome> {
    let grid = bundle.manifest.image_size;
    let hcfg = HashInrConfig {
        grid,
        temporal_bands: config.model.temporal_bands,
        hidden_width: config.model.hidden_width,
        hidden_layers: config.model.hidden_layers,
        hash: hash_config(&config.hash, grid),
    };
    let weights = RegularizerWeights {
        temporal: real::<F>(config.hashinr.temporal_weight),
        low_rank: real::<F>(config.hashinr.low_rank_weight),
    };
    let mut model = HashInrModel::new(hcfg, config.seed);
    let report = hashinr_optimize(
        &mut model,
        &bundle.acquisition,
        &bundle.coil_maps,
        &weights,
        &train_config(config),
    )?;
    let frames = model.render_sequence(bundle.manifest.frames);
    Ok(Outcome { frames, base_frames: None, report: Some(report), model: None, kept: None })
}

fn dainr_plain(config: &RunConfig, bundle: &DatasetBundle<F>) -> Result<Outcome> {
    let grid = bundle.manifest.image_size;
    let mut model = DaInrModel::new(dainr_config(config, grid, 1), config.seed);
    let data = DataTerm::new(&bundle.acquisition, &bundle.coil_maps)?;
    let steps = reconstruction_steps(&model, &bundle.acquisition, &bundle.coil_maps)?;
    let report = train_schedule(&mut model, &data, &steps, &train_config(config))?;
    let blocks: Option<Vec<Rc<Tensor<F>>>> = model.extractor().map(|_| {
        steps.iter().map(|s| s.features.clone().expect("feature steps carry blocks")).collect()
    });
    let frames = render_sequence(&model, bundle.manifest.frames, 1.0, blocks.as_deref())?;
    Ok(Outcome { frames, base_frames: None, report: Some(report), model: Some(model), kept: None })
}

fn dainr_temporal(config: &RunConfig, bundle: &DatasetBundle<F>) -> Result<Outcome> {
    let grid = bundle.manifest.image_size;
    let mut model = DaInrModel::new(dainr_config(config, grid, 2), config.seed);
    let protocol =
        temporal_protocol(&model, &bundle.acquisition, &bundle.coil_maps, config.interpolation.stride)?;
    eprintln!(
        "temporal interpolation: training on {} of {} frames (stride {})",
        protocol.kept.len(),
        protocol.total,
        config.interpolation.stride
    );
    let data = DataTerm::new(&protocol.kept_acq, &bundle.coil_maps)?;
    let report = train_schedule(&mut model, &data, &protocol.steps, &train_config(config))?;
    let blocks = match (&protocol.bank, model.extractor()) {
        (Some(bank), Some(fx)) => Some(bank.extract(fx, grid)?),
        _ => None,
    };
    let frames = render_sequence(&model, protocol.total, 1.0, blocks.as_deref())?;
    Ok(Outcome {
        frames,
        base_frames: None,
        report: Some(report),
        model: Some(model),
        kept: Some(protocol.kept),
    })
}

fn dainr_spatial(config: &RunConfig, bundle: &DatasetBundle<F>) -> Result<Outcome> {
    let n = bundle.manifest.image_size;
    let gt = bundle.ground_truth.as_ref().ok_or_else(|| {
        Error::MissingGroundTruth(
            "spatial interpolation re-simulates a low-resolution acquisition from the stored truth"
                .into(),
        )
    })?;
    let SamplingScheme::Radial { spokes_per_frame, start_spoke } = bundle.manifest.sampling else {
        return Err(CliError::Usage(
            "spatial interpolation needs a radial acquisition to re-simulate".into(),
        ));
    };
    let lo = lowres_size(n, config.interpolation.factor)?;
    eprintln!(
        "spatial interpolation: training at {lo}x{lo}, rendering back at {n}x{n} (factor {})",
        config.interpolation.factor
    );
    let lo_gt = lowres_sequence(gt, lo)?;
    let lo_maps = generate_coil_maps::<F>(bundle.manifest.coils, lo, bundle.manifest.seed);
    let mut lo_acq = retrospective_undersample(&lo_gt, &lo_maps, spokes_per_frame, start_spoke)?;
    if bundle.manifest.noise_sigma > 0.0 {
        add_acquisition_noise(
            &mut lo_acq,
            real(bundle.manifest.noise_sigma),
            bundle.manifest.seed.wrapping_add(1),
        );
    }

    let mut model = DaInrModel::new(dainr_config(config, lo, 1), config.seed);
    let data = DataTerm::new(&lo_acq, &lo_maps)?;
    let steps = reconstruction_steps(&model, &lo_acq, &lo_maps)?;
    let report = train_schedule(&mut model, &data, &steps, &train_config(config))?;

    let total = bundle.manifest.frames;
    let (full_blocks, base_blocks) = match model.extractor() {
        None => (None, None),
        Some(fx) => {
            let bank = FeatureBank::for_reconstruction(&lo_acq, &lo_maps)?;
            (Some(bank.extract(fx, n)?), Some(bank.extract(fx, lo)?))
        }
    };
    let frames = render_sequence(&model, total, n as f64 / lo as f64, full_blocks.as_deref())?;
    let base_frames = render_sequence(&model, total, 1.0, base_blocks.as_deref())?;
    Ok(Outcome {
        frames,
        base_frames: Some(base_frames),
        report: Some(report),
        model: Some(model),
        kept: None,
    })
}
