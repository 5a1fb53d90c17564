//! What a reconstruction directory contains and how commands claim their
//! output directories.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::error::{CliError, Result};

/// Complex frames in the dataset raw encoding, at the output resolution.
pub const FRAMES_FILE: &str = "frames.raw";
/// Spatial interpolation only: the render at the training resolution.
pub const BASE_FRAMES_FILE: &str = "frames_base.raw";
pub const TRACE_FILE: &str = "trace.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const RECON_MANIFEST_FILE: &str = "recon.json";
pub const METRICS_FILE: &str = "metrics.csv";

/// Shapes and provenance of a reconstruction directory, so `evaluate` can
/// read the raw frames without guessing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconManifest {
    pub method: Method,
    /// Frame count of `frames.raw`.
    pub frames: usize,
    /// Side length of `frames.raw` frames.
    pub size: usize,
    /// Training-grid side length when it differs (spatial interpolation);
    /// `frames_base.raw` exists exactly when this is set.
    pub base_size: Option<usize>,
    /// Frames that contributed losses (temporal interpolation).
    pub kept_frames: Option<Vec<usize>>,
    /// Completed optimization steps (0 for the zero-filled method).
    pub iterations_run: usize,
    pub final_loss: Option<f64>,
    pub stopped_early: bool,
}

impl ReconManifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| CliError::Config(format!("cannot serialize recon manifest: {e}")))?;
        bytes.push(b'\n');
        fs::write(dir.join(RECON_MANIFEST_FILE), bytes)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RECON_MANIFEST_FILE);
        let bytes = fs::read(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Create `dir` if needed; refuse to write into an existing non-empty one
/// unless the caller passed `--force`.
pub fn claim_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() && !force && fs::read_dir(dir)?.next().is_some() {
        return Err(CliError::OutputNotEmpty(dir.to_path_buf()));
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> ReconManifest {
        ReconManifest {
            method: Method::Dainr,
            frames: 4,
            size: 16,
            base_size: None,
            kept_frames: Some(vec![0, 2]),
            iterations_run: 10,
            final_loss: Some(0.5),
            stopped_early: false,
        }
    }

    #[test]
    fn recon_manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        manifest().save(dir.path()).unwrap();
        assert_eq!(ReconManifest::load(dir.path()).unwrap(), manifest());
    }

    #[test]
    fn out_dir_policy() {
        let root = tempfile::tempdir().unwrap();
        let fresh = root.path().join("fresh");
        claim_out_dir(&fresh, false).unwrap();
        // Empty directories are fine to reuse without --force.
        claim_out_dir(&fresh, false).unwrap();
        std::fs::write(fresh.join("leftover"), b"x").unwrap();
        assert!(matches!(claim_out_dir(&fresh, false), Err(CliError::OutputNotEmpty(_))));
        claim_out_dir(&fresh, true).unwrap();
    }
}
