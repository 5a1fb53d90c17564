//! The run configuration document.
//!
//! One TOML file describes a whole run: flat keys with dotted sections
//! (`phantom.size = 64`, `train.iterations = 2000`). Every key has a
//! default, unknown keys are rejected, and the resolved document — after
//! command-line overrides — is echoed into the output directory as
//! `config.toml` so a run can always be replayed from its artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const ECHO_FILE: &str = "config.toml";

/// Reconstruction algorithm selector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Deformation + canonical network pair.
    #[default]
    Dainr,
    /// Single hash-encoded network over space and time.
    Hashinr,
    /// Density-compensated adjoint, no optimization.
    Zerofill,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    /// Cardiac analog: a myocardial ring whose pool contracts and refills.
    #[default]
    Beating,
    /// Contrast analog: static anatomy with two enhancing regions.
    Uptake,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Cyclic,
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationMode {
    #[default]
    None,
    /// Train on every `stride`-th frame, infer the dropped ones.
    Temporal,
    /// Train on a center-cropped low-resolution dataset, render at full size.
    Spatial,
}

/// `simulate`: what to synthesize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomSection {
    pub kind: PhantomKind,
    /// Image side length N.
    pub size: usize,
    /// Frame count τ.
    pub frames: usize,
    /// Simulated coil count C.
    pub coils: usize,
    /// Standard deviation of complex measurement noise (0 = noiseless).
    pub noise: f64,
}

impl Default for PhantomSection {
    fn default() -> Self {
        Self { kind: PhantomKind::Beating, size: 64, frames: 16, coils: 4, noise: 0.0 }
    }
}

/// `simulate`: the golden-angle protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    /// Spokes binned into each frame.
    pub spokes: usize,
    /// Global index of the scan's first spoke.
    pub start: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self { spokes: 7, start: 0 }
    }
}

/// `reconstruct`: the optimization loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub iterations: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub schedule: Schedule,
    /// Rollback granularity for divergence recovery.
    pub snapshot_every: usize,
    /// Plateau detector: compare means of the last two windows this long...
    pub plateau_window: usize,
    /// ...and stop early when they agree to this relative tolerance.
    pub plateau_tolerance: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr: 1e-3,
            weight_decay: 0.0,
            schedule: Schedule::Cyclic,
            snapshot_every: 100,
            plateau_window: 200,
            plateau_tolerance: 1e-5,
        }
    }
}

/// `reconstruct`: network sizes shared by both INR methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub spatial_bands: usize,
    pub temporal_bands: usize,
    /// Frame rendered without deformation.
    pub canonical_index: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_width: 64,
            hidden_layers: 5,
            spatial_bands: 10,
            temporal_bands: 6,
            canonical_index: 0,
        }
    }
}

/// `reconstruct`: the multiresolution hash encoding. The finest level is
/// always pinned to the training grid size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HashSection {
    pub levels: usize,
    /// Each level's table holds `2^table_log2` rows.
    pub table_log2: u32,
    /// Feature columns per row.
    pub features: usize,
    /// Coarsest lattice resolution.
    pub base_resolution: usize,
}

impl Default for HashSection {
    fn default() -> Self {
        Self { levels: 8, table_log2: 14, features: 2, base_resolution: 4 }
    }
}

/// `reconstruct --method hashinr`: regularizer weights (both 0 = the bare
/// data-term baseline).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HashInrSection {
    pub temporal_weight: f64,
    pub low_rank_weight: f64,
}

/// `reconstruct --method dainr`: the optional frozen feature pathway fed by
/// zero-filled reconstructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSection {
    pub enabled: bool,
    pub channels: usize,
    pub layers: usize,
}

impl Default for FeatureSection {
    fn default() -> Self {
        Self { enabled: false, channels: 16, layers: 3 }
    }
}

/// `interpolate`: which held-out coordinates to infer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpolationSection {
    pub mode: InterpolationMode,
    /// Temporal mode: train on every `stride`-th frame (2 or 3).
    pub stride: usize,
    /// Spatial mode: resolution ratio between dataset and training grid
    /// (1.2, 1.5, or 2.0).
    pub factor: f64,
}

impl Default for InterpolationSection {
    fn default() -> Self {
        Self { mode: InterpolationMode::None, stride: 2, factor: 2.0 }
    }
}

/// `evaluate`: inputs and protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Reconstruction directory to score.
    pub recon: Option<PathBuf>,
    /// Score against the dataset's ground truth (PSNR/SSIM + error maps).
    /// Set false for the ROI-only protocol used when no truth exists.
    pub reference: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { recon: None, reference: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Also write PNG previews next to the PGM ones.
    pub png: bool,
}

/// Everything a run needs, in one document. Command-line flags override the
/// matching keys; the struct that ends up here is what gets echoed to disk.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed: phantom coil maps, network init, frame schedule.
    pub seed: u64,
    pub method: Method,
    /// Dataset directory consumed by `reconstruct` and `evaluate`.
    pub dataset: Option<PathBuf>,
    pub phantom: PhantomSection,
    pub sampling: SamplingSection,
    pub train: TrainSection,
    pub model: ModelSection,
    pub hash: HashSection,
    pub hashinr: HashInrSection,
    pub features: FeatureSection,
    pub interpolation: InterpolationSection,
    pub evaluate: EvaluateSection,
    /// Disc ROIs in the phantom's `[-1, 1]²` coordinates:
    /// `roi.<name> = [center_x, center_y, radius]`.
    pub roi: BTreeMap<String, [f64; 3]>,
    pub output: OutputSection,
}

impl RunConfig {
    /// Defaults, optionally overlaid by a TOML file. Unknown keys anywhere
    /// in the document are an error.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read {}: {e}", path.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    /// Write the resolved document into `dir` for replayability.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?;
        fs::write(dir.join(ECHO_FILE), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let parsed: RunConfig = toml::from_str("").unwrap();
        assert_eq!(parsed, RunConfig::default());
        assert_eq!(parsed.phantom.size, 64);
        assert_eq!(parsed.train.iterations, 2000);
    }

    #[test]
    fn dotted_keys_reach_their_sections() {
        let parsed: RunConfig = toml::from_str(
            "seed = 9\nmethod = \"hashinr\"\nphantom.size = 32\nhashinr.temporal_weight = 0.5\nroi.core = [0.0, 0.1, 0.2]\n",
        )
        .unwrap();
        assert_eq!(parsed.seed, 9);
        assert_eq!(parsed.method, Method::Hashinr);
        assert_eq!(parsed.phantom.size, 32);
        assert_eq!(parsed.hashinr.temporal_weight, 0.5);
        assert_eq!(parsed.roi["core"], [0.0, 0.1, 0.2]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("spokes = 13\n").is_err());
        assert!(toml::from_str::<RunConfig>("phantom.sizes = 64\n").is_err());
        assert!(toml::from_str::<RunConfig>("train.momentum = 0.9\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut config = RunConfig::default();
        config.seed = 123;
        config.dataset = Some(PathBuf::from("runs/ds"));
        config.roi.insert("aorta".into(), [-0.3, 0.3, 0.05]);
        let dir = tempfile::tempdir().unwrap();
        config.echo(dir.path()).unwrap();
        let back = RunConfig::load(Some(&dir.path().join(ECHO_FILE))).unwrap();
        assert_eq!(back, config);
    }
}
