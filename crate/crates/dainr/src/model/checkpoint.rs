//! On-disk model snapshots.
//!
//! A checkpoint is a single binary file: a magic string, a little-endian
//! `u64` giving the length of a JSON manifest, the manifest itself, then the
//! raw tensor data as little-endian `f32` values in manifest order. The
//! manifest records the model configuration and the name and shape of every
//! tensor, so a file can be validated before any weights are touched.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::model::dainr::{DaInrConfig, DaInrModel};
use crate::{real, Error, Real, Result};

const MAGIC: &[u8; 8] = b"DAINRv1\0";

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: DaInrConfig,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

/// Write `model` (trainable parameters plus the frozen extractor, if any)
/// to `path`, truncating any existing file.
pub fn save_checkpoint<T: Real>(model: &DaInrModel<T>, path: &Path) -> Result<()> {
    let named = model.named_tensors();
    let manifest = Manifest {
        config: model.config().clone(),
        tensors: named
            .iter()
            .map(|(name, t)| TensorEntry { name: name.clone(), shape: t.shape().to_vec() })
            .collect(),
    };
    let manifest_bytes = serde_json::to_vec(&manifest)?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&manifest_bytes)?;
    for (_, tensor) in &named {
        for &v in tensor.data() {
            let bits = (v.to_f64().unwrap_or(f64::NAN) as f32).to_le_bytes();
            w.write_all(&bits)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a checkpoint back into a freshly constructed model. The stored
/// configuration decides every dimension; names and shapes are validated
/// against it before any tensor is installed.
pub fn load_checkpoint<T: Real>(path: &Path) -> Result<DaInrModel<T>> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Dataset(format!("{} is not a checkpoint file", path.display())));
    }
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)?;
    let manifest_len = u64::from_le_bytes(len_bytes) as usize;
    let mut manifest_bytes = vec![0u8; manifest_len];
    r.read_exact(&mut manifest_bytes)?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;

    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for entry in &manifest.tensors {
        let n: usize = entry.shape.iter().product();
        let mut bytes = vec![0u8; 4 * n];
        r.read_exact(&mut bytes)?;
        let values: Vec<T> = bytes
            .chunks_exact(4)
            .map(|c| real(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        tensors.push((entry.name.clone(), Tensor::from_vec(entry.shape.clone(), values)));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Dataset(format!(
            "{} has trailing bytes after the last tensor",
            path.display()
        )));
    }

    // Seed is irrelevant here: every stored tensor is overwritten below.
    let mut model = DaInrModel::new(manifest.config, 0);
    model.set_named_tensors(&tensors)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dainr::FeatureSettings;

    fn small_config(features: Option<FeatureSettings>) -> DaInrConfig {
        let mut config = DaInrConfig::for_grid(16);
        config.spatial_bands = 3;
        config.temporal_bands = 2;
        config.hidden_width = 8;
        config.hidden_layers = 2;
        config.hash.levels = 2;
        config.hash.table_size_log2 = 6;
        config.features = features;
        config
    }

    #[test]
    fn round_trip_is_exact_for_f32() {
        let model = DaInrModel::<f32>::new(
            small_config(Some(FeatureSettings { channels: 4, layers: 2, input_frames: 1 })),
            99,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint::<f32>(&path).unwrap();

        assert_eq!(loaded.config(), model.config());
        let before = model.named_tensors();
        let after = loaded.named_tensors();
        assert_eq!(before.len(), after.len());
        for ((name_a, a), (name_b, b)) in before.iter().zip(&after) {
            assert_eq!(name_a, name_b);
            assert_eq!(a.shape(), b.shape());
            assert_eq!(a.data(), b.data(), "tensor {name_a} changed in transit");
        }
    }

    #[test]
    fn f64_round_trip_quantizes_to_f32() {
        let model = DaInrModel::<f64>::new(small_config(None), 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint::<f64>(&path).unwrap();
        for ((_, a), (_, b)) in model.named_tensors().iter().zip(&loaded.named_tensors()) {
            for (&x, &y) in a.data().iter().zip(b.data()) {
                assert_eq!(x as f32 as f64, y);
            }
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not_a_model.bin");
        std::fs::write(&path, b"PNG\x0d\x0a\x1a\x0a junk").unwrap();
        match load_checkpoint::<f32>(&path) {
            Err(Error::Dataset(msg)) => assert!(msg.contains("not a checkpoint")),
            other => panic!("expected a dataset error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn rejects_truncated_files() {
        let model = DaInrModel::<f32>::new(small_config(None), 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(load_checkpoint::<f32>(&path).is_err());
    }

    #[test]
    fn mismatched_names_are_rejected() {
        let mut model = DaInrModel::<f32>::new(small_config(None), 3);
        let mut tensors = model.named_tensors();
        tensors.swap(0, 2);
        match model.set_named_tensors(&tensors) {
            Err(Error::Dataset(msg)) => assert!(msg.contains("unexpected tensor")),
            other => panic!("expected a dataset error, got {:?}", other.map(|_| ())),
        }
    }
}
