//! `evaluate`: score a reconstruction directory against its dataset.
//!
//! With a stored ground truth the output is per-frame PSNR/SSIM plus error
//! maps; ROI mean-magnitude curves come along whenever `roi.*` masks are
//! configured and are the whole protocol when no truth exists
//! (`evaluate.reference = false`).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dainr::eval::{disc_mask, error_map, normalize_sequence, MetricReport};
use dainr::phantom::{read_sequence, DatasetBundle};
use dainr::Error;

use crate::artifacts::{claim_out_dir, ReconManifest, FRAMES_FILE, METRICS_FILE};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::preview;

/// Metrics run in double precision regardless of how the frames were made.
pub fn run(config: &RunConfig, out: &Path, force: bool) -> Result<()> {
    let recon_dir = config.evaluate.recon.as_deref().ok_or_else(|| {
        CliError::Usage("config needs `evaluate.recon = \"<dir>\"` to evaluate".into())
    })?;
    let dataset_dir = config.dataset.as_deref().ok_or_else(|| {
        CliError::Usage("config needs `dataset = \"<dir>\"` to evaluate".into())
    })?;

    let recon = ReconManifest::load(recon_dir)?;
    let test = read_sequence::<f64>(&recon_dir.join(FRAMES_FILE), recon.size, recon.frames)?;
    let bundle = DatasetBundle::<f64>::load(dataset_dir)?;

    let reference = if config.evaluate.reference {
        Some(bundle.ground_truth.as_ref().ok_or_else(|| {
            Error::MissingGroundTruth(
                "dataset stores no truth; set evaluate.reference = false for the ROI-only protocol"
                    .into(),
            )
        })?)
    } else {
        None
    };
    let rois: Vec<(String, Vec<bool>)> = config
        .roi
        .iter()
        .map(|(name, &[cx, cy, radius])| (name.clone(), disc_mask(recon.size, [cx, cy], radius)))
        .collect();
    if reference.is_none() && rois.is_empty() {
        return Err(CliError::Usage(
            "nothing to score: evaluate.reference = false and no roi.* masks defined".into(),
        ));
    }

    claim_out_dir(out, force)?;
    let report = MetricReport::compute(reference, &test, &rois)?;
    let mut w = BufWriter::new(File::create(out.join(METRICS_FILE))?);
    report.write_csv(&mut w)?;
    w.flush()?;

    if let Some(gt) = reference {
        let r = normalize_sequence(gt)?;
        let t = normalize_sequence(&test)?;
        let maps = (0..test.len())
            .map(|k| error_map(r.frame(k), t.frame(k)))
            .collect::<dainr::Result<Vec<_>>>()?;
        preview::write_scaled_planes(out, "error", recon.size, &maps, config.output.png)?;
    }
    config.echo(out)?;

    if let Some(db) = report.mean_psnr_db() {
        eprintln!("mean psnr {db:.2} dB");
    }
    if let Some(ssim) = report.mean_ssim() {
        eprintln!("mean ssim {ssim:.4}");
    }
    eprintln!("wrote metrics for {} frames to {}", report.frames, out.display());
    Ok(())
}
