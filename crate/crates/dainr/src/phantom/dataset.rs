//! The on-disk dataset format.
//!
//! A dataset is a directory: `manifest.json` describing shapes and
//! provenance, plus flat little-endian `f32` arrays (`.raw`) holding the
//! ground truth (optional), coil maps, per-frame trajectories and density
//! weights, and the acquisition itself. Complex values are interleaved
//! `(re, im)`; arrays are row-major. The layout is deliberately trivial to
//! parse from any language, and externally acquired data can be dropped in
//! by writing the same files (Cartesian data uses the `cartesian` sampling
//! tag).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::image::{ComplexImage, ImageSequence};
use crate::mri::{FrameAcquisition, KSpaceAcquisition, SamplingScheme, Trajectory};
use crate::{real, Error, Real, Result};

/// The only element encoding this format version defines.
pub const DTYPE: &str = "f32le";
pub const FORMAT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.raw";
pub const COIL_MAPS_FILE: &str = "coil_maps.raw";
pub const TRAJECTORY_FILE: &str = "trajectory.raw";
pub const WEIGHTS_FILE: &str = "weights.raw";
pub const ACQUISITION_FILE: &str = "acquisition.raw";

/// Everything needed to interpret the raw arrays, in one JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// Element encoding of every raw array (always little-endian `f32`,
    /// complex interleaved, row-major).
    pub dtype: String,
    /// Image side length N.
    pub image_size: usize,
    /// Frame count τ.
    pub frames: usize,
    /// Coil count C.
    pub coils: usize,
    /// Trajectory points per frame.
    pub samples_per_frame: usize,
    pub sampling: SamplingScheme,
    /// Undersampling relative to a fully sampled Cartesian scan (N over
    /// spokes per frame for radial data; 1 for Cartesian data).
    pub acceleration_factor: f64,
    /// Seed the dataset was generated from (0 for external data).
    pub seed: u64,
    /// Standard deviation of the added complex measurement noise.
    pub noise_sigma: f64,
    pub has_ground_truth: bool,
}

/// An in-memory dataset: optional ground truth, coil maps, acquisition,
/// and the manifest tying them together.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle<T> {
    pub ground_truth: Option<ImageSequence<T>>,
    pub coil_maps: Vec<ComplexImage<T>>,
    pub acquisition: KSpaceAcquisition<T>,
    pub manifest: DatasetManifest,
}

impl<T: Real> DatasetBundle<T> {
    /// Assemble a bundle, deriving the manifest from the data shapes.
    pub fn new(
        ground_truth: Option<ImageSequence<T>>,
        coil_maps: Vec<ComplexImage<T>>,
        acquisition: KSpaceAcquisition<T>,
        seed: u64,
        noise_sigma: f64,
    ) -> Result<Self> {
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            dtype: DTYPE.into(),
            image_size: acquisition.grid,
            frames: acquisition.len(),
            coils: acquisition.coils(),
            samples_per_frame: acquisition.samples_per_frame(),
            sampling: acquisition.scheme,
            acceleration_factor: acquisition.acceleration(),
            seed,
            noise_sigma,
            has_ground_truth: ground_truth.is_some(),
        };
        let bundle = Self { ground_truth, coil_maps, acquisition, manifest };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Cross-check every shape against the manifest.
    pub fn validate(&self) -> Result<()> {
        self.acquisition.validate()?;
        let m = &self.manifest;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Dataset(format!("unsupported format version {}", m.format_version)));
        }
        if m.dtype != DTYPE {
            return Err(Error::Dataset(format!("unsupported dtype '{}'", m.dtype)));
        }
        let ok = m.image_size == self.acquisition.grid
            && m.frames == self.acquisition.len()
            && m.coils == self.acquisition.coils()
            && m.samples_per_frame == self.acquisition.samples_per_frame()
            && m.sampling == self.acquisition.scheme
            && m.acceleration_factor == self.acquisition.acceleration()
            && m.has_ground_truth == self.ground_truth.is_some()
            && self.coil_maps.len() == m.coils
            && self.coil_maps.iter().all(|c| c.size() == m.image_size)
            && self
                .acquisition
                .frames
                .iter()
                .all(|f| f.trajectory.len() == m.samples_per_frame);
        if !ok {
            return Err(Error::Dataset("manifest disagrees with array shapes".into()));
        }
        if let Some(gt) = &self.ground_truth {
            if gt.size() != m.image_size || gt.len() != m.frames {
                return Err(Error::Dataset(format!(
                    "ground truth is {}×{0} over {} frames, manifest says {}×{2} over {} frames",
                    gt.size(),
                    gt.len(),
                    m.image_size,
                    m.frames
                )));
            }
        }
        Ok(())
    }

    /// Write the dataset into `dir`, creating it if needed. Existing files
    /// are overwritten; callers own any don't-clobber policy.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        fs::create_dir_all(dir)?;
        let mut manifest_json = serde_json::to_vec_pretty(&self.manifest)?;
        manifest_json.push(b'\n');
        fs::write(dir.join(MANIFEST_FILE), manifest_json)?;

        if let Some(gt) = &self.ground_truth {
            write_raw(&dir.join(GROUND_TRUTH_FILE), gt.iter().flat_map(|f| f.to_interleaved()))?;
        }
        write_raw(&dir.join(COIL_MAPS_FILE), self.coil_maps.iter().flat_map(|c| c.to_interleaved()))?;
        write_raw(
            &dir.join(TRAJECTORY_FILE),
            self.acquisition.frames.iter().flat_map(|f| {
                f.trajectory.points.iter().flat_map(|p| [p[0], p[1]])
            }),
        )?;
        write_raw(
            &dir.join(WEIGHTS_FILE),
            self.acquisition.frames.iter().flat_map(|f| f.trajectory.weights.iter().copied()),
        )?;
        write_raw(
            &dir.join(ACQUISITION_FILE),
            self.acquisition
                .frames
                .iter()
                .flat_map(|f| f.samples.iter().flatten().flat_map(|z| [z.re, z.im])),
        )?;
        Ok(())
    }

    /// Read a dataset directory back. Every array length is checked against
    /// the manifest before anything is interpreted.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_bytes = fs::read(dir.join(MANIFEST_FILE))?;
        let manifest: DatasetManifest = serde_json::from_slice(&manifest_bytes)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Dataset(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        if manifest.dtype != DTYPE {
            return Err(Error::Dataset(format!("unsupported dtype '{}'", manifest.dtype)));
        }
        let (n, tau, coils, p) =
            (manifest.image_size, manifest.frames, manifest.coils, manifest.samples_per_frame);

        let ground_truth = if manifest.has_ground_truth {
            Some(read_sequence(&dir.join(GROUND_TRUTH_FILE), n, tau)?)
        } else {
            None
        };

        let maps_flat: Vec<T> = read_raw_exact(&dir.join(COIL_MAPS_FILE), coils * n * n * 2)?;
        let coil_maps = maps_flat
            .chunks_exact(n * n * 2)
            .map(|chunk| ComplexImage::from_interleaved(n, chunk))
            .collect::<Result<Vec<_>>>()?;

        let traj_flat: Vec<T> = read_raw_exact(&dir.join(TRAJECTORY_FILE), tau * p * 2)?;
        let weights_flat: Vec<T> = read_raw_exact(&dir.join(WEIGHTS_FILE), tau * p)?;
        let samples_flat: Vec<T> = read_raw_exact(&dir.join(ACQUISITION_FILE), tau * coils * p * 2)?;

        let frames = (0..tau)
            .map(|t| {
                let points = traj_flat[t * p * 2..(t + 1) * p * 2]
                    .chunks_exact(2)
                    .map(|c| [c[0], c[1]])
                    .collect();
                let weights = weights_flat[t * p..(t + 1) * p].to_vec();
                let samples = (0..coils)
                    .map(|c| {
                        let base = (t * coils + c) * p * 2;
                        samples_flat[base..base + p * 2]
                            .chunks_exact(2)
                            .map(|z| Complex::new(z[0], z[1]))
                            .collect()
                    })
                    .collect();
                FrameAcquisition { trajectory: Trajectory { points, weights }, samples }
            })
            .collect();

        let bundle = Self {
            ground_truth,
            coil_maps,
            acquisition: KSpaceAcquisition { grid: n, scheme: manifest.sampling, frames },
            manifest,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}

/// Stream scalars to a raw file as little-endian `f32`.
pub fn write_raw<T: Real>(path: &Path, values: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        let bits = (v.to_f64().unwrap_or(f64::NAN) as f32).to_le_bytes();
        w.write_all(&bits)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a whole raw file of little-endian `f32` scalars.
pub fn read_raw<T: Real>(path: &Path) -> Result<Vec<T>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Dataset(format!(
            "{} is {} bytes, not a multiple of 4",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| real(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect())
}

/// [`read_raw`], then insist on an exact element count.
pub fn read_raw_exact<T: Real>(path: &Path, expected: usize) -> Result<Vec<T>> {
    let values = read_raw(path)?;
    if values.len() != expected {
        return Err(Error::Dataset(format!(
            "{} holds {} values, expected {expected}",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

/// Write a complex image sequence in the dataset raw encoding.
pub fn write_sequence<T: Real>(path: &Path, seq: &ImageSequence<T>) -> Result<()> {
    write_raw(path, seq.iter().flat_map(|f| f.to_interleaved()))
}

/// Read a complex image sequence of known shape back.
pub fn read_sequence<T: Real>(path: &Path, size: usize, frames: usize) -> Result<ImageSequence<T>> {
    let flat: Vec<T> = read_raw_exact(path, frames * size * size * 2)?;
    let images = flat
        .chunks_exact(size * size * 2)
        .map(|chunk| ComplexImage::from_interleaved(size, chunk))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageSequence::new(images))
}
